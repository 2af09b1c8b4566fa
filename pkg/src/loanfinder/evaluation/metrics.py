"""Confusion counts and derived metrics."""
from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Mapping

from ..detectors import Prediction

METRICS = ("precision", "recall", "f1", "accuracy")


class AlignmentError(ValueError):
    """Predictions and gold labels do not cover the same forms."""


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None
    recall: float | None
    f1: float
    accuracy: float
    scope: str = ""

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int, scope: str = "") -> "MetricsReport":
        precision = tp / (tp + fp) if tp + fp else None
        recall = tp / (tp + fn) if tp + fn else None
        if precision is None or recall is None or precision + recall == 0:
            f1 = 0.0
        else:
            f1 = 2 * precision * recall / (precision + recall)
        total = tp + fp + fn + tn
        accuracy = (tp + tn) / total if total else 0.0
        return cls(tp, fp, fn, tn, precision, recall, f1, accuracy, scope)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def metric(self, name: str) -> float | None:
        if name not in METRICS:
            raise KeyError(name)
        return getattr(self, name)


def score(
    predictions: Iterable[Prediction], gold: Mapping[str, bool], scope: str = ""
) -> MetricsReport:
    """Confusion counts of predictions against gold labels keyed by form id."""
    tp = fp = fn = tn = 0
    seen = set()
    for p in predictions:
        if p.form_id in seen:
            raise AlignmentError(f"duplicate prediction for {p.form_id!r}")
        seen.add(p.form_id)
        try:
            truth = gold[p.form_id]
        except KeyError:
            raise AlignmentError(f"no gold label for {p.form_id!r}") from None
        if p.predicted:
            if truth:
                tp += 1
            else:
                fp += 1
        elif truth:
            fn += 1
        else:
            tn += 1
    if len(seen) != len(gold):
        missing = sorted(set(gold) - seen)
        raise AlignmentError(f"{len(missing)} gold forms lack predictions, e.g. {missing[0]!r}")
    return MetricsReport.from_counts(tp, fp, fn, tn, scope)


def mean_report(reports: Iterable[MetricsReport], scope: str = "") -> MetricsReport:
    """Average of per-block metrics; counts are summed.

    Precision and recall are averaged over the blocks where they are
    defined.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")

    def avg(name):
        values = [r.metric(name) for r in reports if r.metric(name) is not None]
        return fmean(values) if values else None

    return MetricsReport(
        tp=sum(r.tp for r in reports),
        fp=sum(r.fp for r in reports),
        fn=sum(r.fn for r in reports),
        tn=sum(r.tn for r in reports),
        precision=avg("precision"),
        recall=avg("recall"),
        f1=avg("f1"),
        accuracy=avg("accuracy"),
        scope=scope,
    )


def pooled_report(reports: Iterable[MetricsReport], scope: str = "") -> MetricsReport:
    """Metrics of the summed confusion counts."""
    reports = list(reports)
    return MetricsReport.from_counts(
        sum(r.tp for r in reports), sum(r.fp for r in reports),
        sum(r.fn for r in reports), sum(r.tn for r in reports), scope,
    )
