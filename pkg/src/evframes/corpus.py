"""Corpus loading, feature vocabularies, batching, synthetic data.

The on-disk corpus format is JSON-lines, one sentence per line:

    {"tokens": [...], "pos": [...], "dep": [...], "ent_bio": [...],
     "events": [{"trigger": [s, e], "type": "...",
                 "arguments": [{"span": [s, e], "role": "..."}, ...]}, ...]}

All spans are 0-based inclusive in raw-token coordinates, i.e. before the
sentinel tokens are prepended.  An optional ``id`` field names the
sentence (defaults to the line number) and an optional ``meta`` field
carries generator tags; both are ignored by consumers that do not need
them.  Linguistic annotations (POS/DEP/entity BIO) are stored in the
file, never computed here.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, InvalidInput, SchemaError
from .frame_codec import (
    FIRST_REAL,
    SENT_TAG,
    EventTuple,
    LabelSchema,
    NULL_TUPLE,
    Sentence,
    augment_sentence,
    decode_frames,
    encode_frames,
)

UNK_LABEL = "<unk>"
PAD_CHAR = "<pad>"


@dataclass(frozen=True)
class CorpusExample:
    """One sentence with its canonical gold frame sequence."""

    id: str
    sentence: Sentence
    gold: tuple[EventTuple, ...]
    tags: tuple[str, ...] = ()  # generator flags such as "multi_event"

    def __post_init__(self):
        if not self.gold:
            raise InvalidInput(f"example {self.id}: gold frames must not be empty")


@dataclass(frozen=True)
class FeatureVocab:
    """Label-to-index maps for the discrete token features.

    Every map reserves ``<unk>`` (total lookup: unseen labels never fail)
    and ``SENT`` (the sentinel feature label).  The character map also
    reserves ``<pad>`` for in-token padding.
    """

    pos_index: dict[str, int]
    dep_index: dict[str, int]
    ent_index: dict[str, int]
    char_index: dict[str, int]

    def pos_id(self, label: str) -> int:
        return self.pos_index.get(label, self.pos_index[UNK_LABEL])

    def dep_id(self, label: str) -> int:
        return self.dep_index.get(label, self.dep_index[UNK_LABEL])

    def ent_id(self, label: str) -> int:
        return self.ent_index.get(label, self.ent_index[UNK_LABEL])

    def char_id(self, ch: str) -> int:
        return self.char_index.get(ch, self.char_index[UNK_LABEL])

    def char_ids(self, token: str, max_word_len: int) -> list[int]:
        """Character ids of ``token``, truncated/padded to ``max_word_len``.

        Sentinel tokens are represented by the reserved SENT character.
        """
        if token in ("[unused1]", "[unused2]"):
            ids = [self.char_index[SENT_TAG]]
        else:
            ids = [self.char_id(c) for c in token[:max_word_len]]
        pad = self.char_index[PAD_CHAR]
        return ids + [pad] * (max_word_len - len(ids))

    def to_dict(self) -> dict:
        return {
            "pos_index": self.pos_index,
            "dep_index": self.dep_index,
            "ent_index": self.ent_index,
            "char_index": self.char_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureVocab":
        return cls(
            dict(d["pos_index"]),
            dict(d["dep_index"]),
            dict(d["ent_index"]),
            dict(d["char_index"]),
        )


def build_vocab(examples) -> FeatureVocab:
    """Collect feature vocabularies from a corpus.

    Index assignment is deterministic: reserved entries first, then the
    observed labels in sorted order.
    """
    examples = list(examples)
    if not examples:
        raise InvalidInput("cannot build a vocabulary from an empty corpus")
    pos, dep, ent, chars = set(), set(), set(), set()
    for ex in examples:
        s = ex.sentence
        pos.update(s.pos_tags[FIRST_REAL:])
        dep.update(s.dep_tags[FIRST_REAL:])
        ent.update(s.ent_tags[FIRST_REAL:])
        for token in s.tokens[FIRST_REAL:]:
            chars.update(token)

    def index(labels, reserved):
        table = {label: i for i, label in enumerate(reserved)}
        for label in sorted(set(labels) - set(reserved)):
            table[label] = len(table)
        return table

    return FeatureVocab(
        pos_index=index(pos, (UNK_LABEL, SENT_TAG)),
        dep_index=index(dep, (UNK_LABEL, SENT_TAG)),
        ent_index=index(ent, (UNK_LABEL, SENT_TAG)),
        char_index=index(chars, (PAD_CHAR, UNK_LABEL, SENT_TAG)),
    )


# --------------------------------------------------------------------------
# file IO


def _example_from_record(rec: dict, schema: LabelSchema, line: int) -> CorpusExample:
    for key in ("tokens", "pos", "dep", "ent_bio", "events"):
        if key not in rec:
            raise FormatError(f"missing field {key!r}", line=line)
    try:
        sentence = augment_sentence(rec["tokens"], rec["pos"], rec["dep"], rec["ent_bio"])
        gold = encode_frames(sentence, rec["events"], schema)
    except SchemaError:
        raise
    except InvalidInput as exc:
        raise FormatError(str(exc), line=line) from None
    tags = tuple(rec.get("meta", {}).get("tags", ()))
    return CorpusExample(
        id=str(rec.get("id", f"line-{line}")), sentence=sentence, gold=tuple(gold), tags=tags
    )


def load_corpus(path, schema: LabelSchema) -> list[CorpusExample]:
    """Read a JSONL corpus file, validating every record.

    Malformed records raise FormatError naming the 1-based line; labels
    missing from ``schema`` raise SchemaError.
    """
    examples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", line=line_no) from None
            examples.append(_example_from_record(rec, schema, line_no))
    return examples


def example_to_record(ex: CorpusExample) -> dict:
    """Serializable record for one example, spans in raw coordinates."""
    s = ex.sentence
    events = decode_frames(ex.gold, s)
    for rec in events:  # surface phrases are derived data, keep files minimal
        rec.pop("trigger_phrase", None)
        for arg in rec["arguments"]:
            arg.pop("phrase", None)
    record = {
        "id": ex.id,
        "tokens": list(s.tokens[FIRST_REAL:]),
        "pos": list(s.pos_tags[FIRST_REAL:]),
        "dep": list(s.dep_tags[FIRST_REAL:]),
        "ent_bio": list(s.ent_tags[FIRST_REAL:]),
        "events": events,
    }
    if ex.tags:
        record["meta"] = {"tags": list(ex.tags)}
    return record


def save_corpus(examples, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(example_to_record(ex), sort_keys=True) + "\n")


def downsample_no_event(examples, keep_rate: float, seed: int = 0) -> list[CorpusExample]:
    """Randomly keep a fraction of the event-less sentences.

    Event-bearing sentences are always kept.
    """
    if not 0.0 <= keep_rate <= 1.0:
        raise ConfigError(f"keep_rate must be in [0, 1], got {keep_rate}")
    rng = random.Random(seed)
    kept = []
    for ex in examples:
        if ex.gold == (NULL_TUPLE,) and rng.random() >= keep_rate:
            continue
        kept.append(ex)
    return kept


# --------------------------------------------------------------------------
# batching


@dataclass(frozen=True)
class Batch:
    """Padded index arrays for a group of examples.

    Gold frame sequences are right-padded with null frames to a fixed
    length; ``tuple_mask`` distinguishes real frames (1) from padding (0).
    """

    examples: tuple[CorpusExample, ...]
    token_mask: np.ndarray  # (B, N) bool
    pos_ids: np.ndarray  # (B, N) int64
    dep_ids: np.ndarray
    ent_ids: np.ndarray
    char_ids: np.ndarray  # (B, N, max_word_len) int64
    gold_positions: np.ndarray  # (B, T, 4) int64: s_tr, e_tr, s_ar, e_ar
    gold_etype: np.ndarray  # (B, T) int64
    gold_role: np.ndarray  # (B, T) int64
    tuple_mask: np.ndarray  # (B, T) float64

    @property
    def size(self) -> int:
        return len(self.examples)

    @property
    def tokens(self) -> list[list[str]]:
        return [list(ex.sentence.tokens) for ex in self.examples]

    @property
    def lengths(self) -> np.ndarray:
        return self.token_mask.sum(axis=1)


def _batch_of(examples, vocab: FeatureVocab, schema: LabelSchema, max_tuples: int,
              max_word_len: int) -> Batch:
    b = len(examples)
    n_max = max(ex.sentence.n for ex in examples)
    token_mask = np.zeros((b, n_max), dtype=bool)
    pos_ids = np.full((b, n_max), vocab.pos_index[UNK_LABEL], dtype=np.int64)
    dep_ids = np.full((b, n_max), vocab.dep_index[UNK_LABEL], dtype=np.int64)
    ent_ids = np.full((b, n_max), vocab.ent_index[UNK_LABEL], dtype=np.int64)
    char_ids = np.full((b, n_max, max_word_len), vocab.char_index[PAD_CHAR], dtype=np.int64)
    gold_positions = np.zeros((b, max_tuples, 4), dtype=np.int64)
    gold_positions[:, :, 2:] = 1  # null frame argument span
    gold_etype = np.zeros((b, max_tuples), dtype=np.int64)
    gold_role = np.zeros((b, max_tuples), dtype=np.int64)
    tuple_mask = np.zeros((b, max_tuples), dtype=np.float64)

    for i, ex in enumerate(examples):
        s = ex.sentence
        token_mask[i, : s.n] = True
        for j in range(s.n):
            pos_ids[i, j] = vocab.pos_id(s.pos_tags[j])
            dep_ids[i, j] = vocab.dep_id(s.dep_tags[j])
            ent_ids[i, j] = vocab.ent_id(s.ent_tags[j])
            char_ids[i, j] = vocab.char_ids(s.tokens[j], max_word_len)
        if len(ex.gold) > max_tuples:
            raise ConfigError(
                f"example {ex.id} has {len(ex.gold)} gold frames, exceeding max_tuples={max_tuples}"
            )
        for t, frame in enumerate(ex.gold):
            gold_positions[i, t] = (frame.s_tr, frame.e_tr, frame.s_ar, frame.e_ar)
            gold_etype[i, t] = schema.event_index(frame.event_type)
            gold_role[i, t] = schema.role_index(frame.role)
            tuple_mask[i, t] = 1.0

    return Batch(
        examples=tuple(examples),
        token_mask=token_mask,
        pos_ids=pos_ids,
        dep_ids=dep_ids,
        ent_ids=ent_ids,
        char_ids=char_ids,
        gold_positions=gold_positions,
        gold_etype=gold_etype,
        gold_role=gold_role,
        tuple_mask=tuple_mask,
    )


def make_batches(examples, vocab: FeatureVocab, schema: LabelSchema, batch_size: int,
                 max_tuples: int, shuffle_seed: int | None = None,
                 max_word_len: int = 10) -> list[Batch]:
    """Chunk a corpus into padded batches.

    With ``shuffle_seed=None`` the corpus order is kept; otherwise the
    order is a pure function of the seed.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    if max_tuples < 1:
        raise ConfigError(f"max_tuples must be >= 1, got {max_tuples}")
    examples = list(examples)
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(examples)
    return [
        _batch_of(examples[i : i + batch_size], vocab, schema, max_tuples, max_word_len)
        for i in range(0, len(examples), batch_size)
    ]


# --------------------------------------------------------------------------
# synthetic corpus generator


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic corpus generator.

    The three headline rates are unconditional per-sentence Bernoulli
    draws; overlap and shared-argument sentences always carry the events
    needed to realize the flag.
    """

    num_sentences: int
    num_event_types: int = 5
    num_roles: int = 6
    multi_event_rate: float = 0.3
    shared_arg_rate: float = 0.2
    overlap_arg_rate: float = 0.1
    seed: int = 0
    no_event_rate: float = 0.08
    argless_rate: float = 0.15
    id_prefix: str = "synth"

    def __post_init__(self):
        if self.num_sentences < 0:
            raise ConfigError("num_sentences must be non-negative")
        if self.num_event_types < 1 or self.num_roles < 1:
            raise ConfigError("need at least one event type and one role")
        for name in ("multi_event_rate", "shared_arg_rate", "overlap_arg_rate",
                     "no_event_rate", "argless_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")


_SYLLABLES = ("ba", "den", "kir", "mol", "ras", "sut", "tav", "vor", "zel", "lun", "fir", "gom")
_FILLER_POS = ("DET", "ADV", "ADP", "NOUN", "PRON", "CCONJ")
_FILLER_DEP = ("det", "advmod", "case", "obl", "nsubj", "cc")


def _word(index: int) -> str:
    # unique pronounceable pseudo-word for a global lexicon slot
    a, rest = index % len(_SYLLABLES), index // len(_SYLLABLES)
    b, c = rest % len(_SYLLABLES), rest // len(_SYLLABLES)
    return _SYLLABLES[c % len(_SYLLABLES)] + _SYLLABLES[b] + _SYLLABLES[a]


@dataclass(frozen=True)
class _Lexicon:
    trigger_words: tuple[tuple[str, ...], ...]  # per event type
    entity_words: tuple[tuple[str, ...], ...]  # per entity class
    filler_words: tuple[str, ...]


def _build_lexicon(num_event_types: int, num_classes: int) -> _Lexicon:
    slot = 0

    def take(k):
        nonlocal slot
        words = tuple(_word(i) for i in range(slot, slot + k))
        slot += k
        return words

    triggers = tuple(take(3) for _ in range(num_event_types))
    entities = tuple(take(4) for _ in range(num_classes))
    fillers = take(12)
    return _Lexicon(triggers, entities, fillers)


def synthetic_schema(num_event_types: int, num_roles: int) -> LabelSchema:
    return LabelSchema.from_labels(
        [f"ETYPE{i:02d}" for i in range(num_event_types)],
        [f"ROLE{i:02d}" for i in range(num_roles)],
    )


class _SentenceBuilder:
    """Accumulates tokens and aligned feature tags, tracking spans."""

    def __init__(self, lex: _Lexicon):
        self._lex = lex
        self.tokens: list[str] = []
        self.pos: list[str] = []
        self.dep: list[str] = []
        self.ent: list[str] = []

    def fillers(self, rng, low=1, high=3):
        for _ in range(rng.randint(low, high)):
            i = rng.randrange(len(self._lex.filler_words))
            self.tokens.append(self._lex.filler_words[i])
            self.pos.append(_FILLER_POS[i % len(_FILLER_POS)])
            self.dep.append(_FILLER_DEP[i % len(_FILLER_DEP)])
            self.ent.append("O")

    def trigger(self, rng, type_idx) -> tuple[int, int]:
        words = self._lex.trigger_words[type_idx]
        length = 2 if rng.random() < 0.15 else 1
        start = len(self.tokens)
        for k in range(length):
            self.tokens.append(words[rng.randrange(len(words))] if k == 0 else words[-1])
            self.pos.append("VERB")
            self.dep.append("ROOT" if k == 0 else "compound")
            self.ent.append("O")
        return start, start + length - 1

    def entity(self, rng, class_idx, length=None) -> tuple[int, int]:
        words = self._lex.entity_words[class_idx]
        length = length or rng.randint(1, 2)
        start = len(self.tokens)
        for k in range(length):
            self.tokens.append(words[rng.randrange(len(words))])
            self.pos.append("PROPN" if k == 0 else "NOUN")
            self.dep.append("obj" if k == 0 else "compound")
            self.ent.append(f"B-C{class_idx}" if k == 0 else f"I-C{class_idx}")
        return start, start + length - 1


def generate_synthetic(config: SynthConfig) -> tuple[list[CorpusExample], LabelSchema]:
    """Generate a corpus with known trigger/argument placements.

    Event types are signalled by dedicated trigger lexicons, roles by the
    pair (event type, entity class), so the task is fully learnable from
    the emitted features.  Output is a pure function of ``config``.
    Per-sentence generator flags land in ``CorpusExample.tags``:
    ``multi_event``, ``shared_arg``, ``overlap_args``, ``no_event``.
    """
    rng = random.Random(config.seed)
    schema = synthetic_schema(config.num_event_types, config.num_roles)
    lex = _build_lexicon(config.num_event_types, config.num_roles)

    def role_for(type_idx: int, class_idx: int) -> str:
        # deterministic role so the mapping is learnable; indices are 1-based
        # into the schema because index 0 holds the reserved labels
        return schema.role_types[1 + (type_idx + class_idx) % config.num_roles]

    examples = []
    for i in range(config.num_sentences):
        multi = rng.random() < config.multi_event_rate
        overlap = rng.random() < config.overlap_arg_rate
        shared = multi and rng.random() < config.shared_arg_rate
        no_event = (not multi and not overlap) and rng.random() < config.no_event_rate

        builder = _SentenceBuilder(lex)
        events: list[dict] = []
        tags: list[str] = []

        if no_event:
            tags.append("no_event")
            builder.fillers(rng, 4, 9)
        else:
            n_events = 1 if not multi else (3 if rng.random() < 0.25 else 2)
            type_pool = list(range(1, config.num_event_types + 1))
            rng.shuffle(type_pool)
            type_idxs = [type_pool[k % len(type_pool)] for k in range(n_events)]

            builder.fillers(rng)
            records = []
            for k, type_idx in enumerate(type_idxs):
                tr = builder.trigger(rng, type_idx - 1)
                builder.fillers(rng)
                records.append({"trigger": tr, "type_idx": type_idx, "args": []})

            # decide argument structure
            argless = (n_events == 1 and not overlap and rng.random() < config.argless_rate)
            if not argless:
                for rec in records:
                    n_args = rng.randint(1, 2)
                    for _ in range(n_args):
                        cls = rng.randrange(config.num_roles)
                        span = builder.entity(rng, cls)
                        rec["args"].append((span, cls))
                        if rng.random() < 0.5:
                            builder.fillers(rng, 1, 2)
                if overlap:
                    # nested pair: outer 3-token phrase, inner single token
                    outer_cls = rng.randrange(config.num_roles)
                    inner_cls = (outer_cls + 1) % config.num_roles
                    outer = builder.entity(rng, outer_cls, length=3)
                    # retag middle word from the inner class lexicon
                    mid = outer[0] + 1
                    inner_words = lex.entity_words[inner_cls]
                    builder.tokens[mid] = inner_words[rng.randrange(len(inner_words))]
                    rec = records[rng.randrange(len(records))]
                    rec["args"].append((outer, outer_cls))
                    rec["args"].append(((mid, mid), inner_cls))
                    tags.append("overlap_args")
                if shared and len(records) >= 2:
                    cls = rng.randrange(config.num_roles)
                    span = builder.entity(rng, cls)
                    for rec in rng.sample(records, 2):
                        rec["args"].append((span, cls))
                    tags.append("shared_arg")
            builder.fillers(rng)

            if multi:
                tags.append("multi_event")
            for rec in records:
                events.append(
                    {
                        "trigger": list(rec["trigger"]),
                        "type": schema.event_types[rec["type_idx"]],
                        "arguments": [
                            {"span": list(span), "role": role_for(rec["type_idx"], cls)}
                            for span, cls in rec["args"]
                        ],
                    }
                )

        sentence = augment_sentence(builder.tokens, builder.pos, builder.dep, builder.ent)
        gold = encode_frames(sentence, events, schema)
        examples.append(
            CorpusExample(
                id=f"{config.id_prefix}-{i:04d}",
                sentence=sentence,
                gold=tuple(gold),
                tags=tuple(tags),
            )
        )
    return examples, schema


def split_corpus(examples, ratios=(529, 30, 40)) -> tuple[list, list, list]:
    """Deterministic contiguous split by the given proportions."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ConfigError(f"ratios must be three non-negative numbers, got {ratios!r}")
    examples = list(examples)
    total = len(examples)
    weight = sum(ratios)
    n_dev = round(total * ratios[1] / weight)
    n_test = round(total * ratios[2] / weight)
    n_train = total - n_dev - n_test
    return (
        examples[:n_train],
        examples[n_train : n_train + n_dev],
        examples[n_train + n_dev :],
    )
