"""Four-level scoring of predicted event frames.

Levels, each micro-averaged over the corpus with one-to-one matching
inside every sentence:

  TI  - trigger span matches a gold trigger span
  TC  - TI and the event type matches
  AI  - argument span matches a gold argument of a gold event with the
        predicted event type (a flag relaxes this to span-only)
  ARC - AI and the role matches

Items are event mentions (distinct trigger span + type) for TI/TC and
argument instances (event type, argument span, role; one per frame) for
AI/ARC, so TC can never exceed TI nor ARC exceed AI on any metric.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import AlignmentError, ConfigError
from .frame_codec import EventTuple

PARTITIONS = ("event-count", "argument-count", "arg-overlap", "roles-per-argument")


@dataclass(frozen=True)
class LevelScore:
    predicted: int
    gold: int
    correct: int

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict:
        return {
            "predicted": self.predicted,
            "gold": self.gold,
            "correct": self.correct,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass
class EvalReport:
    ti: LevelScore
    tc: LevelScore
    ai: LevelScore
    arc: LevelScore
    breakdowns: dict[str, dict[str, "EvalReport"]] = field(default_factory=dict)

    def level(self, name: str) -> LevelScore:
        return getattr(self, name.lower())

    def to_dict(self) -> dict:
        out = {name: self.level(name).to_dict() for name in ("TI", "TC", "AI", "ARC")}
        if self.breakdowns:
            out["breakdowns"] = {
                rule: {cell: rep.to_dict() for cell, rep in cells.items()}
                for rule, cells in self.breakdowns.items()
            }
        return out


def _event_mentions(tuples) -> set[tuple]:
    return {(t.s_tr, t.e_tr, t.event_type) for t in tuples if not t.is_null}


def _argument_instances(tuples) -> list[EventTuple]:
    return [t for t in set(tuples) if not t.is_null and t.has_argument]


class _Tally:
    """Accumulates matched/predicted/gold counts for the four levels."""

    def __init__(self):
        self.counts = {name: [0, 0, 0] for name in ("TI", "TC", "AI", "ARC")}

    def add(self, name: str, pred_keys, gold_keys):
        pred, gold = Counter(pred_keys), Counter(gold_keys)
        correct = sum((pred & gold).values())
        c = self.counts[name]
        c[0] += sum(pred.values())
        c[1] += sum(gold.values())
        c[2] += correct

    def report(self) -> EvalReport:
        levels = {name: LevelScore(*self.counts[name]) for name in self.counts}
        return EvalReport(ti=levels["TI"], tc=levels["TC"], ai=levels["AI"], arc=levels["ARC"])


def _add_sentence(tally: _Tally, pred_tuples, gold_tuples, ai_requires_etype: bool):
    pred_events = _event_mentions(pred_tuples)
    gold_events = _event_mentions(gold_tuples)
    tally.add("TI", [(s, e) for s, e, _ in pred_events], [(s, e) for s, e, _ in gold_events])
    tally.add("TC", pred_events, gold_events)

    pred_args = _argument_instances(pred_tuples)
    gold_args = _argument_instances(gold_tuples)
    ai_key = (
        (lambda t: (t.event_type, t.s_ar, t.e_ar))
        if ai_requires_etype
        else (lambda t: (t.s_ar, t.e_ar))
    )
    arc_key = lambda t: ai_key(t) + (t.role,)
    tally.add("AI", map(ai_key, pred_args), map(ai_key, gold_args))
    tally.add("ARC", map(arc_key, pred_args), map(arc_key, gold_args))


def _align(predictions: dict, gold_examples) -> None:
    gold_ids = [ex.id for ex in gold_examples]
    if len(set(gold_ids)) != len(gold_ids):
        dupes = sorted({i for i in gold_ids if gold_ids.count(i) > 1})
        raise AlignmentError(f"duplicate gold sentence ids: {dupes}")
    missing = sorted(set(gold_ids) - set(predictions))
    extra = sorted(set(predictions) - set(gold_ids))
    if missing or extra:
        raise AlignmentError(
            f"prediction/gold id mismatch: missing={missing[:10]} extra={extra[:10]}"
        )


def score(predictions: dict[str, list[EventTuple]], gold_examples,
          ai_requires_etype: bool = True) -> EvalReport:
    """Score predicted frames against gold, micro-averaged over sentences.

    ``predictions`` maps every gold sentence id to its predicted frames
    (possibly empty).  Duplicate predicted frames count once.
    """
    gold_examples = list(gold_examples)
    _align(predictions, gold_examples)
    tally = _Tally()
    for ex in gold_examples:
        _add_sentence(tally, set(predictions[ex.id]), ex.gold, ai_requires_etype)
    return tally.report()


# --------------------------------------------------------------------------
# partitioned evaluation


def _count_cell(value: int) -> str:
    return ">1" if value > 1 else str(value)


def _spans_intersect(a, b) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def _sentence_cell(ex, rule: str) -> str:
    events = _event_mentions(ex.gold)
    args = _argument_instances(ex.gold)
    if rule == "event-count":
        return _count_cell(len(events))
    if rule == "argument-count":
        per_event = Counter((t.s_tr, t.e_tr, t.event_type) for t in args)
        if not per_event:
            return "0"
        return _count_cell(max(per_event.values()))
    if rule == "arg-overlap":
        spans = sorted({(t.s_ar, t.e_ar) for t in args})
        for i in range(len(spans)):
            for j in range(i + 1, len(spans)):
                if _spans_intersect(spans[i], spans[j]):
                    return "overlap"
        return "no-overlap"
    raise ConfigError(f"unknown partition rule {rule!r}; expected one of {PARTITIONS}")


def _roles_per_argument_cells(predictions, gold_examples, ai_requires_etype) -> dict:
    """Partition argument instances by whether their span carries one gold
    role or several within the sentence; only AI/ARC are meaningful."""
    tallies = {"1": _Tally(), ">1": _Tally()}
    seen_gold = {"1": False, ">1": False}
    ai_key = (
        (lambda t: (t.event_type, t.s_ar, t.e_ar))
        if ai_requires_etype
        else (lambda t: (t.s_ar, t.e_ar))
    )
    arc_key = lambda t: ai_key(t) + (t.role,)
    for ex in gold_examples:
        gold_args = _argument_instances(ex.gold)
        roles_by_span: dict[tuple, set] = {}
        for t in gold_args:
            roles_by_span.setdefault((t.s_ar, t.e_ar), set()).add(t.role)
        multi = {span for span, roles in roles_by_span.items() if len(roles) > 1}
        pred_args = _argument_instances(set(predictions[ex.id]))
        for cell in ("1", ">1"):
            want_multi = cell == ">1"
            g = [t for t in gold_args if ((t.s_ar, t.e_ar) in multi) == want_multi]
            p = [t for t in pred_args if ((t.s_ar, t.e_ar) in multi) == want_multi]
            if g:
                seen_gold[cell] = True
            # trigger levels stay at zero: this partition is over argument instances
            tallies[cell].add("AI", map(ai_key, p), map(ai_key, g))
            tallies[cell].add("ARC", map(arc_key, p), map(arc_key, g))
    return {cell: tallies[cell].report() for cell in tallies if seen_gold[cell]}


def breakdown(predictions: dict[str, list[EventTuple]], gold_examples, rule: str,
              ai_requires_etype: bool = True) -> dict[str, EvalReport]:
    """Score within gold-derived partition cells.

    Sentence-level rules: ``event-count`` (0 / 1 / >1 gold events),
    ``argument-count`` (most arguments carried by one gold event),
    ``arg-overlap`` (two distinct gold argument spans intersect).  The
    ``roles-per-argument`` rule partitions argument instances instead.
    Cells with no gold members are omitted.
    """
    gold_examples = list(gold_examples)
    _align(predictions, gold_examples)
    if rule == "roles-per-argument":
        return _roles_per_argument_cells(predictions, gold_examples, ai_requires_etype)
    if rule not in PARTITIONS:
        raise ConfigError(f"unknown partition rule {rule!r}; expected one of {PARTITIONS}")
    cells: dict[str, list] = {}
    for ex in gold_examples:
        cells.setdefault(_sentence_cell(ex, rule), []).append(ex)
    return {
        cell: score({ex.id: predictions[ex.id] for ex in members}, members, ai_requires_etype)
        for cell, members in sorted(cells.items())
    }


def partition_cells(gold_examples, rule: str) -> dict[str, list[str]]:
    """Sentence ids per cell for a sentence-level partition rule."""
    if rule == "roles-per-argument":
        raise ConfigError("roles-per-argument partitions argument instances, not sentences")
    out: dict[str, list[str]] = {}
    for ex in gold_examples:
        out.setdefault(_sentence_cell(ex, rule), []).append(ex.id)
    return out


def render_table(report: EvalReport, title: str = "overall") -> str:
    """Aligned plain-text table with P/R/F1 columns per level."""
    headers = ["", "TI-P", "TI-R", "TI-F1", "TC-P", "TC-R", "TC-F1",
               "AI-P", "AI-R", "AI-F1", "ARC-P", "ARC-R", "ARC-F1"]

    def row(name, rep):
        cells = [name]
        for level in ("TI", "TC", "AI", "ARC"):
            s = rep.level(level)
            cells += [f"{100 * s.precision:.1f}", f"{100 * s.recall:.1f}", f"{100 * s.f1:.1f}"]
        return cells

    rows = [row(title, report)]
    for rule, cells_map in report.breakdowns.items():
        for cell, rep in cells_map.items():
            rows.append(row(f"{rule}={cell}", rep))
    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(r, widths))
        for r in [headers] + rows
    ]
    return "\n".join(lines)
