"""Event-frame data model.

A sentence is extended with two sentinel tokens at positions 0 and 1.
Position 0 stands in for "no trigger" and position 1 for "no argument",
so every event frame can be written as a fixed-arity 6-tuple

    (s_tr, e_tr, event_type, s_ar, e_ar, role)

of two token spans and two labels.  A sentence without events is encoded
as the single null tuple ``(0, 0, NULL-EVT, 1, 1, NA)``, which doubles as
the decoder's stop signal.  All indices are 0-based and inclusive.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidInput, SchemaError

TRIGGER_SENTINEL = "[unused1]"
ARGUMENT_SENTINEL = "[unused2]"
SENT_TAG = "SENT"  # feature label assigned to the two sentinel positions
NULL_EVENT_TYPE = "NULL-EVT"
NO_ROLE = "NA"

# first index a real (non-sentinel) token can occupy
FIRST_REAL = 2


@dataclass(frozen=True)
class LabelSchema:
    """Ordered label inventories for event types and argument roles.

    Index 0 of each inventory is reserved: ``NULL-EVT`` for event types
    and ``NA`` for roles.  Classifier output layers are sized directly
    from these tuples, so ordering is part of the contract.
    """

    event_types: tuple[str, ...]
    role_types: tuple[str, ...]

    def __post_init__(self):
        for name, labels, reserved in (
            ("event_types", self.event_types, NULL_EVENT_TYPE),
            ("role_types", self.role_types, NO_ROLE),
        ):
            if len(set(labels)) != len(labels):
                raise SchemaError(f"{name} contains duplicates")
            if not labels or labels[0] != reserved:
                raise SchemaError(f"{name} must start with the reserved label {reserved!r}")
            if labels.count(reserved) != 1:
                raise SchemaError(f"{name} must contain {reserved!r} exactly once")

    @classmethod
    def from_labels(cls, event_types, role_types) -> "LabelSchema":
        """Build a schema from plain label collections, adding the reserved entries."""
        evs = tuple(sorted(set(event_types) - {NULL_EVENT_TYPE}))
        rls = tuple(sorted(set(role_types) - {NO_ROLE}))
        return cls((NULL_EVENT_TYPE,) + evs, (NO_ROLE,) + rls)

    @property
    def num_event_types(self) -> int:
        """Real event types, excluding the null entry."""
        return len(self.event_types) - 1

    @property
    def num_roles(self) -> int:
        return len(self.role_types) - 1

    def event_index(self, label: str) -> int:
        try:
            return self.event_types.index(label)
        except ValueError:
            raise SchemaError(f"unknown event type {label!r}") from None

    def role_index(self, label: str) -> int:
        try:
            return self.role_types.index(label)
        except ValueError:
            raise SchemaError(f"unknown role {label!r}") from None

    def to_dict(self) -> dict:
        return {"event_types": list(self.event_types), "role_types": list(self.role_types)}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelSchema":
        return cls(tuple(d["event_types"]), tuple(d["role_types"]))


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence with the two sentinels already prepended.

    All feature sequences are aligned with ``tokens``; the sentinel
    positions carry the reserved feature label ``SENT``.
    """

    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...]
    dep_tags: tuple[str, ...]
    ent_tags: tuple[str, ...]

    def __post_init__(self):
        n = len(self.tokens)
        if n < FIRST_REAL + 1:
            raise InvalidInput("sentence must contain at least one real token")
        if self.tokens[0] != TRIGGER_SENTINEL or self.tokens[1] != ARGUMENT_SENTINEL:
            raise InvalidInput(
                f"positions 0/1 must be {TRIGGER_SENTINEL!r}/{ARGUMENT_SENTINEL!r}"
            )
        for name in ("pos_tags", "dep_tags", "ent_tags"):
            if len(getattr(self, name)) != n:
                raise InvalidInput(f"{name} length differs from token count")

    @property
    def n(self) -> int:
        """Length including the two sentinels."""
        return len(self.tokens)

    def phrase(self, start: int, end: int) -> str:
        """Surface string of the inclusive token span."""
        return " ".join(self.tokens[start : end + 1])


@dataclass(frozen=True)
class EventTuple:
    """One event frame: trigger span, event type, argument span, role.

    The null frame is ``(0, 0, NULL-EVT, 1, 1, NA)``; a frame whose
    trigger has no argument carries the argument sentinel span ``(1, 1)``
    and role ``NA``.
    """

    s_tr: int
    e_tr: int
    event_type: str
    s_ar: int
    e_ar: int
    role: str

    def sort_key(self):
        # canonical ordering: spans first, labels as deterministic tie-breaks
        return (self.s_tr, self.e_tr, self.s_ar, self.e_ar, self.event_type, self.role)

    @property
    def is_null(self) -> bool:
        return (self.s_tr, self.e_tr) == (0, 0)

    @property
    def has_argument(self) -> bool:
        return (self.s_ar, self.e_ar) != (1, 1)

    def to_text(self) -> str:
        return f"{self.s_tr} {self.e_tr} {self.event_type} {self.s_ar} {self.e_ar} {self.role}"


NULL_TUPLE = EventTuple(0, 0, NULL_EVENT_TYPE, 1, 1, NO_ROLE)


def validate_tuple(t: EventTuple, n: int, schema: LabelSchema | None = None) -> None:
    """Check every frame invariant against a sentence of length ``n``.

    Raises InvalidInput on a structural violation, SchemaError on an
    unknown label.
    """
    if not (0 <= t.s_tr <= t.e_tr < n and 0 <= t.s_ar <= t.e_ar < n):
        raise InvalidInput(f"span out of range for sentence length {n}: {t.to_text()}")
    trigger_null = (t.s_tr, t.e_tr) == (0, 0)
    if not trigger_null and t.s_tr < FIRST_REAL:
        raise InvalidInput(f"trigger span touches a sentinel position: {t.to_text()}")
    argument_null = (t.s_ar, t.e_ar) == (1, 1)
    if not argument_null and t.s_ar < FIRST_REAL:
        raise InvalidInput(f"argument span touches a sentinel position: {t.to_text()}")
    if (t.role == NO_ROLE) != argument_null:
        raise InvalidInput(f"role must be {NO_ROLE!r} exactly when the argument is empty: {t.to_text()}")
    if (t.event_type == NULL_EVENT_TYPE) != trigger_null:
        raise InvalidInput(
            f"event type must be {NULL_EVENT_TYPE!r} exactly when the trigger is empty: {t.to_text()}"
        )
    if trigger_null and not argument_null:
        raise InvalidInput(f"null frame cannot carry an argument: {t.to_text()}")
    if not trigger_null and not argument_null:
        if t.s_tr <= t.e_ar and t.s_ar <= t.e_tr:
            raise InvalidInput(f"trigger and argument spans overlap: {t.to_text()}")
    if schema is not None:
        schema.event_index(t.event_type)
        schema.role_index(t.role)


def augment_sentence(raw_tokens, pos, dep, ent) -> Sentence:
    """Prepend the sentinel tokens to a raw tokenization.

    Feature sequences must be aligned with ``raw_tokens``; the sentinel
    positions receive the reserved ``SENT`` label.  Gold spans expressed
    in raw-token coordinates shift by +2 afterwards.
    """
    raw_tokens = tuple(raw_tokens)
    if not raw_tokens:
        raise InvalidInput("raw token list is empty")
    features = []
    for name, seq in (("pos", pos), ("dep", dep), ("ent", ent)):
        seq = tuple(seq)
        if len(seq) != len(raw_tokens):
            raise InvalidInput(f"{name} sequence length {len(seq)} != token count {len(raw_tokens)}")
        features.append((SENT_TAG, SENT_TAG) + seq)
    return Sentence(
        tokens=(TRIGGER_SENTINEL, ARGUMENT_SENTINEL) + raw_tokens,
        pos_tags=features[0],
        dep_tags=features[1],
        ent_tags=features[2],
    )


def _check_raw_span(span, raw_len: int, what: str) -> tuple[int, int]:
    try:
        s, e = int(span[0]), int(span[1])
    except (TypeError, ValueError, IndexError):
        raise InvalidInput(f"{what} span must be a [start, end] pair, got {span!r}") from None
    if not (0 <= s <= e < raw_len):
        raise InvalidInput(f"{what} span {span!r} out of range for {raw_len} raw tokens")
    return s, e


def encode_frames(sentence: Sentence, gold_events, schema: LabelSchema) -> list[EventTuple]:
    """Convert gold event records to the canonical frame sequence.

    ``gold_events`` is a list of records ``{"trigger": [s, e], "type": str,
    "arguments": [{"span": [s, e], "role": str}, ...]}`` with spans in
    raw-token coordinates.  Each (trigger, argument) pair becomes one
    frame; a trigger without arguments becomes a frame with the argument
    sentinel; a sentence without events becomes the single null frame.
    Duplicate frames are collapsed and the output is sorted canonically.
    """
    raw_len = sentence.n - FIRST_REAL
    # merge records that share (trigger, type) so an argument-less duplicate
    # of an argument-bearing record does not produce a spurious NA frame
    merged: dict[tuple[int, int, str], list] = {}
    for rec in gold_events:
        s, e = _check_raw_span(rec["trigger"], raw_len, "trigger")
        etype = rec["type"]
        schema.event_index(etype)
        args = merged.setdefault((s, e, etype), [])
        for arg in rec.get("arguments", ()):
            a_s, a_e = _check_raw_span(arg["span"], raw_len, "argument")
            schema.role_index(arg["role"])
            args.append((a_s, a_e, arg["role"]))

    frames: set[EventTuple] = set()
    for (s, e, etype), args in merged.items():
        if not args:
            frames.add(EventTuple(s + 2, e + 2, etype, 1, 1, NO_ROLE))
        for a_s, a_e, role in args:
            frames.add(EventTuple(s + 2, e + 2, etype, a_s + 2, a_e + 2, role))
    if not frames:
        frames.add(NULL_TUPLE)

    out = sorted(frames, key=EventTuple.sort_key)
    for t in out:
        validate_tuple(t, sentence.n, schema)
    return out


def decode_frames(tuples, sentence: Sentence) -> list[dict]:
    """Recover event records (raw-token coordinates, surface phrases) from frames.

    Null frames vanish; frames sharing (trigger, type) are grouped back
    into one record.  Inverse of :func:`encode_frames` up to ordering and
    duplicate removal.
    """
    grouped: dict[tuple[int, int, str], list] = {}
    for t in tuples:
        validate_tuple(t, sentence.n)
        if t.is_null:
            continue
        args = grouped.setdefault((t.s_tr, t.e_tr, t.event_type), [])
        if t.has_argument:
            args.append((t.s_ar, t.e_ar, t.role))

    records = []
    for (s, e, etype), args in sorted(grouped.items()):
        records.append(
            {
                "trigger": [s - 2, e - 2],
                "type": etype,
                "trigger_phrase": sentence.phrase(s, e),
                "arguments": [
                    {
                        "span": [a_s - 2, a_e - 2],
                        "role": role,
                        "phrase": sentence.phrase(a_s, a_e),
                    }
                    for a_s, a_e, role in sorted(args)
                ],
            }
        )
    return records


def tuples_to_text(tuples) -> str:
    """Canonical textual form: frames joined by `` , ``."""
    return " , ".join(t.to_text() for t in tuples)


def text_to_tuples(text: str, schema: LabelSchema | None = None) -> list[EventTuple]:
    """Parse the canonical textual form back into frames."""
    tuples = []
    text = text.strip()
    if not text:
        return tuples
    for i, chunk in enumerate(text.split(" , ")):
        parts = chunk.split()
        if len(parts) != 6:
            raise InvalidInput(f"frame #{i} must have 6 fields, got {len(parts)}: {chunk!r}")
        try:
            t = EventTuple(int(parts[0]), int(parts[1]), parts[2], int(parts[3]), int(parts[4]), parts[5])
        except ValueError:
            raise InvalidInput(f"frame #{i} has non-integer span fields: {chunk!r}") from None
        if schema is not None:
            schema.event_index(t.event_type)
            schema.role_index(t.role)
        tuples.append(t)
    return tuples
