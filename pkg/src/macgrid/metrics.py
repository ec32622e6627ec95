"""Exact-match scoring, reporting filters and overlap / length breakdowns."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import EvaluationError
from .types import Entity

FILTERS = ("all", "disc_sentence", "disc_only")
PATTERNS = ("none", "left", "right", "multiple")
INTERVAL_BUCKETS = ("1", "2", "3", "4", "5", "6", ">=7")
SPAN_BUCKETS = ("3", "4", "5", "6", "7", "8", ">=9")

PATTERN_RULE = (
    "per discontinuous mention: O = other mentions in the same sentence sharing >=1 token; "
    "none if O is empty; left if every shared token lies in the mention's leftmost segment; "
    "right if every shared token lies in its rightmost segment; multiple otherwise"
)


@dataclass(frozen=True)
class EvalCounts:
    true_positives: int = 0
    predicted_count: int = 0
    gold_count: int = 0

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(self.true_positives + other.true_positives,
                          self.predicted_count + other.predicted_count,
                          self.gold_count + other.gold_count)

    @property
    def precision(self) -> float:
        return self.true_positives / self.predicted_count if self.predicted_count else 0.0

    @property
    def recall(self) -> float:
        return self.true_positives / self.gold_count if self.gold_count else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    def prf(self) -> tuple[float, float, float]:
        return self.precision, self.recall, self.f1

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "tp": self.true_positives, "pred": self.predicted_count, "gold": self.gold_count}


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def entity_match(a: Entity, b: Entity) -> bool:
    return a.etype == b.etype and a.segments == b.segments


def score(pred: Iterable[Entity], gold: Iterable[Entity]) -> EvalCounts:
    pred, gold = set(pred), set(gold)
    return EvalCounts(len(pred & gold), len(pred), len(gold))


def _aligned(preds, golds) -> None:
    if len(preds) != len(golds):
        raise EvaluationError(f"prediction corpus has {len(preds)} sentences, gold has {len(golds)}")


@dataclass(frozen=True)
class FilteredScore:
    counts: EvalCounts
    empty: bool

    def prf(self):
        return self.counts.prf()


def filtered_score(
    preds: Sequence[Sequence[Entity]],
    golds: Sequence[Sequence[Entity]],
    filter: str = "all",
) -> FilteredScore:
    """Corpus-level P/R/F1 under one of the reporting filters.

    ``empty`` is set when the filter leaves no gold mention to score.
    """
    _aligned(preds, golds)
    if filter not in FILTERS:
        raise EvaluationError(f"unknown filter {filter!r}")
    total = EvalCounts()
    for pred, gold in zip(preds, golds):
        if filter == "disc_sentence" and not any(e.is_discontinuous for e in gold):
            continue
        if filter == "disc_only":
            pred = [e for e in pred if e.is_discontinuous]
            gold = [e for e in gold if e.is_discontinuous]
        total = total + score(pred, gold)
    return FilteredScore(total, total.gold_count == 0)


def interval_length(e: Entity) -> int:
    return sum(b.start - a.end - 1 for a, b in zip(e.segments, e.segments[1:]))


def span_length(e: Entity) -> int:
    return e.last - e.first + 1


def overlap_pattern(e: Entity, mentions: Iterable[Entity]) -> str:
    if not e.is_discontinuous:
        raise ValueError("overlap patterns are defined for discontinuous mentions only")
    own = e.tokens()
    shared: set[int] = set()
    for other in mentions:
        if other == e:
            continue
        shared |= own & other.tokens()
    if not shared:
        return "none"
    left, right = e.segments[0], e.segments[-1]
    if all(left.start <= t <= left.end for t in shared):
        return "left"
    if all(right.start <= t <= right.end for t in shared):
        return "right"
    return "multiple"


def interval_bucket(e: Entity) -> str:
    k = interval_length(e)
    return ">=7" if k >= 7 else str(k)


def span_bucket(e: Entity) -> str:
    k = span_length(e)
    return ">=9" if k >= 9 else str(k)


def _bucketed(preds, golds, key: Callable[[Entity, Sequence[Entity]], str], labels) -> dict[str, EvalCounts]:
    out = {label: EvalCounts() for label in labels}
    for pred, gold in zip(preds, golds):
        pred_d = {e for e in pred if e.is_discontinuous}
        gold_d = {e for e in gold if e.is_discontinuous}
        pk = {e: key(e, pred) for e in pred_d}
        gk = {e: key(e, gold) for e in gold_d}
        for label in labels:
            p = {e for e in pred_d if pk[e] == label}
            g = {e for e in gold_d if gk[e] == label}
            out[label] = out[label] + score(p, g)
    return out


@dataclass
class EvalReport:
    overall: FilteredScore
    disc_sentence: FilteredScore
    disc_only: FilteredScore
    patterns: dict[str, EvalCounts]
    interval: dict[str, EvalCounts]
    span: dict[str, EvalCounts]
    sentences: int = 0
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        def filt(fs: FilteredScore) -> dict:
            return {**fs.counts.as_dict(), "empty": fs.empty}

        return {
            "meta": dict(self.meta),
            "sentences": self.sentences,
            "overall": filt(self.overall),
            "disc_sentence": filt(self.disc_sentence),
            "disc_only": filt(self.disc_only),
            "patterns": {"rule": PATTERN_RULE, **{k: v.as_dict() for k, v in self.patterns.items()}},
            "buckets": {
                "interval": {k: v.as_dict() for k, v in self.interval.items()},
                "span": {k: v.as_dict() for k, v in self.span.items()},
            },
        }

    def to_text(self) -> str:
        lines = [f"sentences {self.sentences}"]
        for name in FILTERS:
            fs = getattr(self, "overall" if name == "all" else name)
            c = fs.counts
            flag = "  (empty filter)" if fs.empty else ""
            lines.append(f"{name:<14} P={c.precision:.3f} R={c.recall:.3f} F1={c.f1:.3f} "
                         f"tp={c.true_positives} pred={c.predicted_count} gold={c.gold_count}{flag}")
        lines.append(f"overlap patterns ({PATTERN_RULE})")
        for label, c in self.patterns.items():
            lines.append(f"  {label:<9} F1={c.f1:.3f} pred={c.predicted_count} gold={c.gold_count}")
        for title, table in (("interval length", self.interval), ("span length", self.span)):
            lines.append(title)
            for label, c in table.items():
                lines.append(f"  {label:<4} F1={c.f1:.3f} pred={c.predicted_count} gold={c.gold_count}")
        return "\n".join(lines) + "\n"


def full_report(preds: Sequence[Sequence[Entity]], golds: Sequence[Sequence[Entity]], meta: dict | None = None) -> EvalReport:
    """All three filters plus per-pattern and per-length breakdowns.

    Predicted mentions are bucketed against the predicted sentence, gold
    mentions against the gold sentence; only discontinuous mentions enter the
    breakdowns.
    """
    _aligned(preds, golds)
    preds = [list(set(p)) for p in preds]
    golds = [list(set(g)) for g in golds]
    return EvalReport(
        overall=filtered_score(preds, golds, "all"),
        disc_sentence=filtered_score(preds, golds, "disc_sentence"),
        disc_only=filtered_score(preds, golds, "disc_only"),
        patterns=_bucketed(preds, golds, overlap_pattern, PATTERNS),
        interval=_bucketed(preds, golds, lambda e, _: interval_bucket(e), INTERVAL_BUCKETS),
        span=_bucketed(preds, golds, lambda e, _: span_bucket(e), SPAN_BUCKETS),
        sentences=len(golds),
        meta=dict(meta or {}),
    )
