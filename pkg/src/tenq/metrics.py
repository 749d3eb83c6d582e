"""Confusion-matrix metrics and pipeline coverage composition."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class Metrics:
    """Binary classification metrics computed from confusion counts.

    Ratios are computed with exact rational arithmetic and converted to
    float once at the end; zero-denominator cases are defined as 0.
    """

    tp: int
    fp: int
    fn: int
    tn: int
    recall: float
    precision: float
    accuracy: float
    f1: float

    def rounded(self, places: int = 4) -> dict[str, float]:
        return {
            "recall": round(self.recall, places),
            "precision": round(self.precision, places),
            "accuracy": round(self.accuracy, places),
            "f1": round(self.f1, places),
        }


def _ratio(num: int, den: int) -> Fraction:
    if den == 0:
        return Fraction(0)
    return Fraction(num, den)


def confusion_metrics(tp: int, fp: int, fn: int, tn: int) -> Metrics:
    """Compute recall/precision/accuracy/F1 from confusion counts."""
    if min(tp, fp, fn, tn) < 0:
        raise ValueError("confusion counts must be non-negative")
    total = tp + fp + fn + tn
    if total == 0:
        raise ValueError("confusion counts must not all be zero")
    recall = _ratio(tp, tp + fn)
    precision = _ratio(tp, tp + fp)
    accuracy = _ratio(tp + tn, total)
    if precision + recall == 0:
        f1 = Fraction(0)
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics(
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        recall=float(recall),
        precision=float(precision),
        accuracy=float(accuracy),
        f1=float(f1),
    )


def coverage_compose(
    rule_rate: float,
    rule_precision: float,
    fallback_rate: float,
    fallback_precision: float,
) -> float:
    """Overall pipeline coverage: rule share times its precision plus
    fallback share times its precision."""
    for name, v in (
        ("rule_rate", rule_rate),
        ("rule_precision", rule_precision),
        ("fallback_rate", fallback_rate),
        ("fallback_precision", fallback_precision),
    ):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {v}")
    return rule_rate * rule_precision + fallback_rate * fallback_precision


@dataclass
class CoverageReport:
    """Pipeline-level outcome rates for one corpus run.

    ``rule_based_success_rate`` is the share of filings fully handled by
    the rule-based path; ``fallback_rate`` the share recovered through the
    classifier fallback. Precisions are per-item correctness rates within
    each share and are only known when ground truth is available.
    """

    n_filings: int
    rule_based_success_rate: float
    fallback_rate: float
    rule_based_item_precision: float | None = None
    fallback_precision: float | None = None

    @property
    def overall(self) -> float | None:
        if self.rule_based_item_precision is None or self.fallback_precision is None:
            return None
        return coverage_compose(
            self.rule_based_success_rate,
            self.rule_based_item_precision,
            self.fallback_rate,
            self.fallback_precision,
        )

    def to_dict(self) -> dict:
        return {
            "n_filings": self.n_filings,
            "rule_based_success_rate": self.rule_based_success_rate,
            "rule_based_item_precision": self.rule_based_item_precision,
            "fallback_rate": self.fallback_rate,
            "fallback_precision": self.fallback_precision,
            "overall": self.overall,
        }
