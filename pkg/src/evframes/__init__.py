"""Sentence-level event-frame extraction with a pointer-network decoder."""

from .corpus import (
    Batch,
    CorpusExample,
    FeatureVocab,
    SynthConfig,
    build_vocab,
    generate_synthetic,
    load_corpus,
    make_batches,
    save_corpus,
    split_corpus,
)
from .decoder import DecoderState, FrameDecoder, StepOutput
from .encoder import EncoderConfig, TokenEncoder, TokenEncodings, build_token_vocab
from .evaluator import EvalReport, LevelScore, breakdown, render_table, score
from .frame_codec import (
    ARGUMENT_SENTINEL,
    NO_ROLE,
    NULL_EVENT_TYPE,
    NULL_TUPLE,
    TRIGGER_SENTINEL,
    EventTuple,
    LabelSchema,
    Sentence,
    augment_sentence,
    decode_frames,
    encode_frames,
    text_to_tuples,
    tuples_to_text,
)
from .inferencer import best_span, extract_events, infer_tuple
from .model import ExtractionModel, build_model
from .trainer import (
    TrainConfig,
    TrainResult,
    batch_loss,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
    tuple_loss,
)

__version__ = "0.1.0"

__all__ = [
    "ARGUMENT_SENTINEL",
    "Batch",
    "CorpusExample",
    "DecoderState",
    "EncoderConfig",
    "EvalReport",
    "EventTuple",
    "ExtractionModel",
    "FeatureVocab",
    "FrameDecoder",
    "LabelSchema",
    "LevelScore",
    "NO_ROLE",
    "NULL_EVENT_TYPE",
    "NULL_TUPLE",
    "Sentence",
    "StepOutput",
    "SynthConfig",
    "TRIGGER_SENTINEL",
    "TokenEncoder",
    "TokenEncodings",
    "TrainConfig",
    "TrainResult",
    "augment_sentence",
    "batch_loss",
    "best_span",
    "breakdown",
    "build_model",
    "build_token_vocab",
    "build_vocab",
    "decode_frames",
    "encode_frames",
    "evaluate",
    "extract_events",
    "generate_synthetic",
    "infer_tuple",
    "load_checkpoint",
    "load_corpus",
    "make_batches",
    "render_table",
    "save_checkpoint",
    "save_corpus",
    "score",
    "split_corpus",
    "text_to_tuples",
    "train",
    "tuple_loss",
    "tuples_to_text",
]
