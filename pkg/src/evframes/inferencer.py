"""Discrete frames from per-step distributions.

Span extraction maximizes start*end probability subject to b <= e, span
containment in an allowed index set, and non-overlap with the already
chosen span of the other phrase.  Because choosing the trigger first can
steal tokens the argument needs (and vice versa), both orders are tried
and the one with the larger four-way probability product wins.  Sentinel
positions 0 and 1 compete as the one-token "no trigger" / "no argument"
candidates.
"""

from __future__ import annotations

import json

import torch

from .errors import FormatError
from .frame_codec import (
    FIRST_REAL,
    NO_ROLE,
    NULL_TUPLE,
    EventTuple,
    LabelSchema,
    Sentence,
    decode_frames,
)


def best_span(start_prob, end_prob, forbidden=frozenset(), region=None):
    """Highest-scoring span (b, e, start[b]*end[e]) under the constraints.

    A span must satisfy b <= e with every index in [b, e] inside
    ``region`` and outside ``forbidden``.  Ties prefer the smaller b,
    then the smaller e.  Returns None when no span is feasible.
    """
    start = [float(x) for x in start_prob]
    end = [float(x) for x in end_prob]
    n = len(start)
    allowed = [False] * n
    for i in (range(n) if region is None else region):
        if 0 <= i < n and i not in forbidden:
            allowed[i] = True

    best = None
    for b in range(n):
        if not allowed[b]:
            continue
        for e in range(b, n):
            if not allowed[e]:
                break
            score = start[b] * end[e]
            if best is None or score > best[2]:
                best = (b, e, score)
    return best


def _row(tensor: torch.Tensor, row: int) -> list[float]:
    t = tensor[row] if tensor.dim() == 2 else tensor
    return [float(x) for x in t]


def _pick(start, end, sentinel: int, forbidden=frozenset(), n: int | None = None):
    """Greedy span choice: best real span vs. the sentinel candidate.

    The sentinel has the smallest start index, so it also wins ties.
    """
    n = n if n is not None else len(start)
    cand = best_span(start[:n], end[:n], forbidden=forbidden, region=range(FIRST_REAL, n))
    sent = (sentinel, sentinel, start[sentinel] * end[sentinel])
    if cand is None or sent[2] >= cand[2]:
        return sent
    return cand


def infer_tuple(step_output, n: int, schema: LabelSchema, row: int = 0) -> EventTuple:
    """Discretize one decode step into a schema-valid event frame.

    Both span orders (trigger first / argument first) are evaluated and
    the one with the larger product of the four span probabilities is
    kept.  Consistency repairs: a sentinel trigger collapses the frame to
    the null frame, a sentinel argument forces the NA role, and label
    argmaxes skip the reserved entries whenever the spans are real.
    """
    s_tr = _row(step_output.s_tr_prob, row)
    e_tr = _row(step_output.e_tr_prob, row)
    s_ar = _row(step_output.s_ar_prob, row)
    e_ar = _row(step_output.e_ar_prob, row)

    # order A: trigger first
    tr_a = _pick(s_tr, e_tr, sentinel=0, n=n)
    if tr_a[0] == 0:
        ar_a = (1, 1, s_ar[1] * e_ar[1])
    else:
        ar_a = _pick(s_ar, e_ar, sentinel=1, forbidden=set(range(tr_a[0], tr_a[1] + 1)), n=n)

    # order B: argument first
    ar_b = _pick(s_ar, e_ar, sentinel=1, n=n)
    if ar_b[0] == 1:
        tr_b = _pick(s_tr, e_tr, sentinel=0, n=n)
    else:
        tr_b = _pick(s_tr, e_tr, sentinel=0, forbidden=set(range(ar_b[0], ar_b[1] + 1)), n=n)

    if tr_a[2] * ar_a[2] >= tr_b[2] * ar_b[2]:
        trigger, argument = tr_a, ar_a
    else:
        trigger, argument = tr_b, ar_b

    if trigger[0] == 0:
        return NULL_TUPLE

    etype_prob = _row(step_output.etype_prob, row)
    etype = schema.event_types[1 + _argmax(etype_prob[1:])]
    if argument[0] == 1:
        argument = (1, 1)
        role = NO_ROLE
    else:
        role_prob = _row(step_output.role_prob, row)
        role = schema.role_types[1 + _argmax(role_prob[1:])]
    return EventTuple(trigger[0], trigger[1], etype, argument[0], argument[1], role)


def _argmax(values) -> int:
    best, best_i = None, 0
    for i, v in enumerate(values):
        if best is None or v > best:
            best, best_i = v, i
    return best_i


def extract_events(sentence: Sentence, model, max_steps: int) -> list[EventTuple]:
    """Greedy frame-by-frame decoding until the null frame or the step cap.

    Exact duplicates are dropped; the null frame is never returned.
    """
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            encodings = model.encoder.encode_tokens(sentence)
            state = model.decoder.init_state(1)
            found: list[EventTuple] = []
            seen: set[EventTuple] = set()
            for _ in range(max_steps):
                out, state = model.decoder.step(encodings, state)
                frame = infer_tuple(out, sentence.n, model.schema)
                if frame.is_null:
                    break
                if frame not in seen:
                    seen.add(frame)
                    found.append(frame)
            return found
    finally:
        model.train(was_training)


def prediction_record(example_id: str, sentence: Sentence, tuples) -> dict:
    """One prediction line: sentence id plus decoded event records."""
    return {"id": example_id, "events": decode_frames(tuples, sentence)}


def write_predictions(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_predictions(path) -> dict[str, list[dict]]:
    """Read a prediction file back into {id: event records}."""
    out: dict[str, list[dict]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", line=line_no) from None
            if "id" not in rec or "events" not in rec:
                raise FormatError("prediction record needs 'id' and 'events'", line=line_no)
            out[str(rec["id"])] = rec["events"]
    return out
