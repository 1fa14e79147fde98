"""Encoder plus decoder assembled into one trainable module."""

from __future__ import annotations

import torch
from torch import nn

from .corpus import Batch, FeatureVocab
from .decoder import FrameDecoder, StepOutput
from .encoder import EncoderConfig, TokenEncoder
from .frame_codec import LabelSchema


class ExtractionModel(nn.Module):
    """End-to-end event-frame extractor for one label schema."""

    def __init__(self, encoder: TokenEncoder, decoder: FrameDecoder, schema: LabelSchema):
        super().__init__()
        self.encoder = encoder
        self.decoder = decoder
        self.schema = schema

    @property
    def vocab(self) -> FeatureVocab:
        return self.encoder.vocab

    def forward(self, batch: Batch, num_steps: int) -> list[StepOutput]:
        """Encode a batch and run a fixed number of decode steps."""
        encodings = self.encoder.encode_batch(batch)
        state = self.decoder.init_state(batch.size)
        outputs = []
        for _ in range(num_steps):
            out, state = self.decoder.step(encodings, state)
            outputs.append(out)
        return outputs


def build_model(schema: LabelSchema, vocab: FeatureVocab, token_vocab: list[str],
                encoder_config: EncoderConfig, d_p: int = 968,
                device: str = "cpu", dtype: torch.dtype = torch.float32,
                seed: int | None = None) -> ExtractionModel:
    """Construct a fresh model; parameter init is reproducible under ``seed``."""
    if seed is not None:
        torch.manual_seed(seed)
    encoder = TokenEncoder(encoder_config, vocab, token_vocab)
    decoder = FrameDecoder(encoder_config.d_h, d_p, schema.num_event_types, schema.num_roles)
    model = ExtractionModel(encoder, decoder, schema)
    return model.to(device=device, dtype=dtype)
