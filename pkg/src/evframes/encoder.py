"""Token encoding: contextual vectors fused with discrete-feature embeddings.

Each token i is represented by the concatenation

    h_i = [ctx_i ; pos_i ; dep_i ; ent_i ; char_i]

where ctx comes from a pluggable contextual encoder, pos/dep/ent are
embedding lookups of the stored linguistic tags, and char is a
convolution-with-max-pooling summary of the token's characters.  Each
feature block can be toggled off independently for ablations; the output
width is always the sum of the enabled block widths.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .corpus import Batch, FeatureVocab, PAD_CHAR
from .errors import ConfigError
from .frame_codec import ARGUMENT_SENTINEL, TRIGGER_SENTINEL, Sentence

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


@dataclass(frozen=True)
class EncoderConfig:
    """Widths and switches for the token encoder.

    Defaults give the full-scale width 768 + 4*50 = 968; desk-scale runs
    shrink them.  ``contextual`` selects the contextual backbone:
    ``lite`` (trainable lookup + BiLSTM), ``table`` (frozen random
    lookup), or ``hf:<checkpoint>`` (published transformer weights).
    """

    d_ctx: int = 768
    d_pos: int = 50
    d_dep: int = 50
    d_ent: int = 50
    d_char: int = 50
    d_c: int = 50
    cnn_filter: int = 3
    max_word_len: int = 10
    use_pos: bool = True
    use_dep: bool = True
    use_ent: bool = True
    use_char: bool = True
    dropout: float = 0.5
    contextual: str = "lite"
    pooling: str = "first"  # sub-word piece pooling for hf backbones
    lite_bilstm: bool = True
    lite_positional: bool = True
    freeze_contextual: bool = False

    def __post_init__(self):
        for name in ("d_ctx", "d_pos", "d_dep", "d_ent", "d_char", "d_c",
                     "cnn_filter", "max_word_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.pooling not in ("first", "mean"):
            raise ConfigError(f"pooling must be 'first' or 'mean', got {self.pooling!r}")
        if self.cnn_filter > self.max_word_len:
            raise ConfigError("cnn_filter cannot exceed max_word_len")

    @property
    def d_h(self) -> int:
        """Fused width: d_ctx plus the enabled feature widths."""
        width = self.d_ctx
        if self.use_pos:
            width += self.d_pos
        if self.use_dep:
            width += self.d_dep
        if self.use_ent:
            width += self.d_ent
        if self.use_char:
            width += self.d_c
        return width

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in self.__dataclass_fields__.values()}

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(**d)


@dataclass
class TokenEncodings:
    """Per-token fused vectors plus the validity mask.

    ``matrix`` is (n, d_h) for a single sentence or (B, N, d_h) for a
    batch; ``mask`` matches the leading dimensions.
    """

    matrix: torch.Tensor
    mask: torch.Tensor

    @property
    def batched(self) -> "TokenEncodings":
        if self.matrix.dim() == 3:
            return self
        return TokenEncodings(self.matrix.unsqueeze(0), self.mask.unsqueeze(0))


def build_token_vocab(corpora) -> list[str]:
    """Ordered contextual-token vocabulary from one or more corpora.

    Reserved entries come first (pad, unknown, the two sentinels), then
    all observed surface tokens in sorted order.
    """
    seen = set()
    for examples in corpora:
        for ex in examples:
            seen.update(ex.sentence.tokens)
    seen -= {TRIGGER_SENTINEL, ARGUMENT_SENTINEL}
    return [PAD_TOKEN, UNK_TOKEN, TRIGGER_SENTINEL, ARGUMENT_SENTINEL] + sorted(seen)


class LookupEncoder(nn.Module):
    """Contextual encoder backed by a plain token embedding table.

    Optionally adds learned position embeddings and a single BiLSTM layer
    so the vectors carry sentence context.  With ``freeze=True`` and both
    extras off this degenerates to a fixed random embedding table.
    """

    def __init__(self, itos: list[str], d_ctx: int, bilstm: bool = True,
                 positional: bool = True, freeze: bool = False, max_positions: int = 512):
        super().__init__()
        if bilstm and d_ctx % 2:
            raise ConfigError("d_ctx must be even when the lite BiLSTM is enabled")
        self.itos = list(itos)
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        self.width = d_ctx
        self.embedding = nn.Embedding(len(self.itos), d_ctx, padding_idx=0)
        self.positional = nn.Embedding(max_positions, d_ctx) if positional else None
        self.bilstm = (
            nn.LSTM(d_ctx, d_ctx // 2, batch_first=True, bidirectional=True) if bilstm else None
        )
        if freeze:
            self.embedding.weight.requires_grad_(False)

    def token_ids(self, tokens: list[list[str]], device) -> tuple[torch.Tensor, torch.Tensor]:
        n_max = max(len(seq) for seq in tokens)
        ids = torch.zeros(len(tokens), n_max, dtype=torch.long, device=device)
        lengths = torch.zeros(len(tokens), dtype=torch.long)
        unk = self.stoi[UNK_TOKEN]
        for i, seq in enumerate(tokens):
            lengths[i] = len(seq)
            for j, tok in enumerate(seq):
                ids[i, j] = self.stoi.get(tok, unk)
        return ids, lengths

    def forward(self, tokens: list[list[str]]) -> torch.Tensor:
        device = self.embedding.weight.device
        ids, lengths = self.token_ids(tokens, device)
        out = self.embedding(ids)
        if self.positional is not None:
            positions = torch.arange(ids.shape[1], device=device).clamp(
                max=self.positional.num_embeddings - 1
            )
            out = out + self.positional(positions)
        if self.bilstm is not None:
            packed = nn.utils.rnn.pack_padded_sequence(
                out, lengths, batch_first=True, enforce_sorted=False
            )
            packed_out, _ = self.bilstm(packed)
            out, _ = nn.utils.rnn.pad_packed_sequence(
                packed_out, batch_first=True, total_length=ids.shape[1]
            )
        return out


def pool_pieces(piece_matrix: torch.Tensor, word_ids: list[int | None], num_words: int,
                mode: str = "first") -> torch.Tensor:
    """Pool sub-word piece vectors back to token granularity.

    ``word_ids`` maps each piece row to its token index (None for special
    pieces).  ``first`` keeps the first piece of each token, ``mean``
    averages all its pieces.
    """
    d = piece_matrix.shape[-1]
    out = piece_matrix.new_zeros(num_words, d)
    counts = piece_matrix.new_zeros(num_words)
    for row, word in enumerate(word_ids):
        if word is None or word >= num_words:
            continue
        if mode == "first":
            if counts[word] == 0:
                out[word] = piece_matrix[row]
                counts[word] = 1
        else:
            out[word] = out[word] + piece_matrix[row]
            counts[word] = counts[word] + 1
    if mode == "mean":
        out = out / counts.clamp(min=1).unsqueeze(-1)
    return out


class HFEncoder(nn.Module):
    """Contextual encoder wrapping a published transformer checkpoint.

    Tokenizes with the checkpoint's own sub-word vocabulary and pools
    pieces back to token granularity; the sentinel tokens are expected to
    exist as reserved entries of the checkpoint vocabulary.
    """

    def __init__(self, checkpoint: str, pooling: str = "first", freeze: bool = False):
        super().__init__()
        try:
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ConfigError(
                "contextual encoder 'hf:...' needs the transformers package "
                "(pip install evframes[hf])"
            ) from exc
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModel.from_pretrained(checkpoint)
        self.width = self.model.config.hidden_size
        self.pooling = pooling
        if freeze:
            for p in self.model.parameters():
                p.requires_grad_(False)

    def forward(self, tokens: list[list[str]]) -> torch.Tensor:
        enc = self.tokenizer(tokens, is_split_into_words=True, return_tensors="pt",
                             padding=True, truncation=True)
        device = next(self.model.parameters()).device
        enc = {k: v.to(device) for k, v in enc.items()}
        hidden = self.model(**enc).last_hidden_state
        n_max = max(len(seq) for seq in tokens)
        rows = [
            pool_pieces(hidden[i], self.tokenizer(tokens[i], is_split_into_words=True).word_ids(),
                        n_max, self.pooling)
            for i in range(len(tokens))
        ]
        return torch.stack(rows)


def build_contextual(config: EncoderConfig, token_vocab: list[str]) -> nn.Module:
    """Instantiate the contextual backbone named by ``config.contextual``."""
    name = config.contextual
    if name == "lite":
        return LookupEncoder(token_vocab, config.d_ctx, bilstm=config.lite_bilstm,
                             positional=config.lite_positional, freeze=config.freeze_contextual)
    if name == "table":
        return LookupEncoder(token_vocab, config.d_ctx, bilstm=False, positional=False,
                             freeze=True)
    if name.startswith("hf:"):
        enc = HFEncoder(name[3:], pooling=config.pooling, freeze=config.freeze_contextual)
        if enc.width != config.d_ctx:
            raise ConfigError(
                f"checkpoint width {enc.width} != configured d_ctx {config.d_ctx}"
            )
        return enc
    raise ConfigError(f"unknown contextual encoder {name!r}")


class TokenEncoder(nn.Module):
    """Produces the fused per-token representation for sentences or batches."""

    def __init__(self, config: EncoderConfig, vocab: FeatureVocab, token_vocab: list[str]):
        super().__init__()
        self.config = config
        self.vocab = vocab
        self.token_vocab = list(token_vocab)
        self.contextual = build_contextual(config, self.token_vocab)
        if self.contextual.width != config.d_ctx:
            raise ConfigError("contextual width disagrees with config.d_ctx")
        self.pos_emb = nn.Embedding(len(vocab.pos_index), config.d_pos) if config.use_pos else None
        self.dep_emb = nn.Embedding(len(vocab.dep_index), config.d_dep) if config.use_dep else None
        self.ent_emb = nn.Embedding(len(vocab.ent_index), config.d_ent) if config.use_ent else None
        if config.use_char:
            self.char_emb = nn.Embedding(
                len(vocab.char_index), config.d_char, padding_idx=vocab.char_index[PAD_CHAR]
            )
            self.char_cnn = nn.Conv1d(config.d_char, config.d_c, config.cnn_filter)
        else:
            self.char_emb = None
            self.char_cnn = None
        self.dropout = nn.Dropout(config.dropout)

    @property
    def d_h(self) -> int:
        return self.config.d_h

    def _char_vectors(self, char_ids: torch.Tensor) -> torch.Tensor:
        """(…, L) char ids -> (…, d_c) via convolution and max over positions."""
        lead = char_ids.shape[:-1]
        flat = char_ids.reshape(-1, char_ids.shape[-1])
        emb = self.char_emb(flat).transpose(1, 2)  # (F, d_char, L)
        conv = torch.tanh(self.char_cnn(emb))  # (F, d_c, L - k + 1)
        pooled = conv.max(dim=2).values
        return pooled.reshape(*lead, self.config.d_c)

    def embed_chars(self, token: str) -> torch.Tensor:
        """Character-level vector of one token."""
        if self.char_emb is None:
            raise ConfigError("character features are disabled in this configuration")
        ids = torch.tensor(
            self.vocab.char_ids(token, self.config.max_word_len),
            dtype=torch.long, device=self.char_emb.weight.device,
        )
        return self._char_vectors(ids.unsqueeze(0)).squeeze(0)

    def embed_contextual(self, sentence: Sentence) -> torch.Tensor:
        """(n, d_ctx) contextual matrix of one sentence."""
        return self.contextual([list(sentence.tokens)]).squeeze(0)

    def _fuse(self, ctx, pos_ids, dep_ids, ent_ids, char_ids) -> torch.Tensor:
        parts = [ctx]
        if self.pos_emb is not None:
            parts.append(self.pos_emb(pos_ids))
        if self.dep_emb is not None:
            parts.append(self.dep_emb(dep_ids))
        if self.ent_emb is not None:
            parts.append(self.ent_emb(ent_ids))
        if self.char_emb is not None:
            parts.append(self._char_vectors(char_ids))
        return self.dropout(torch.cat(parts, dim=-1))

    def encode_tokens(self, sentence: Sentence) -> TokenEncodings:
        """Fused (n, d_h) encoding of a single sentence."""
        device = next(self.parameters()).device
        v = self.vocab
        pos_ids = torch.tensor([v.pos_id(t) for t in sentence.pos_tags], device=device)
        dep_ids = torch.tensor([v.dep_id(t) for t in sentence.dep_tags], device=device)
        ent_ids = torch.tensor([v.ent_id(t) for t in sentence.ent_tags], device=device)
        char_ids = torch.tensor(
            [v.char_ids(t, self.config.max_word_len) for t in sentence.tokens], device=device
        )
        ctx = self.embed_contextual(sentence)
        matrix = self._fuse(ctx, pos_ids, dep_ids, ent_ids, char_ids)
        mask = torch.ones(sentence.n, dtype=torch.bool, device=device)
        return TokenEncodings(matrix, mask)

    def encode_batch(self, batch: Batch) -> TokenEncodings:
        """Fused (B, N, d_h) encoding of a padded batch."""
        device = next(self.parameters()).device
        as_t = lambda a: torch.from_numpy(a).to(device)
        ctx = self.contextual(batch.tokens)
        matrix = self._fuse(
            ctx, as_t(batch.pos_ids), as_t(batch.dep_ids), as_t(batch.ent_ids),
            as_t(batch.char_ids),
        )
        return TokenEncodings(matrix, as_t(batch.token_mask))
