"""Cross-validation of detection experiments over a shared fold plan."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from statistics import fmean
from typing import Sequence

from .. import classifier as clf
from ..detectors import (
    NED, SCA, DistanceCache, DistanceRecord, Prediction,
    build_distance_records, calibrate_per_language, calibrate_threshold,
    cognate_join_records, detect_closest_match, detect_cognate_based,
)
from ..wordlist import Wordlist
from .folds import FoldPlan
from .metrics import METRICS, MetricsReport, mean_report, score
from .stats import AnovaResult, blocked_anova

log = logging.getLogger(__name__)

CLOSEST = "closest"
COGNATE = "cognate"
CLASSIFIER = "classifier"
CLOSEST_PER_LANGUAGE = "closest-per-language"
METHODS = (CLOSEST, COGNATE, CLASSIFIER, CLOSEST_PER_LANGUAGE)
BOTH = "both"


@dataclass(frozen=True)
class Experiment:
    label: str
    method: str
    measure: str
    loss_kind: str = clf.HINGE
    class_weights: str = clf.UNIFORM
    hyperparameters: clf.Hyperparameters = field(default_factory=clf.Hyperparameters)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == CLASSIFIER:
            if self.measure != BOTH:
                raise ValueError("the classifier uses both distances")
        elif self.measure not in (NED, SCA):
            raise ValueError(f"method {self.method} needs measure ned or sca")


MAIN_EXPERIMENTS = (
    Experiment("closest-ned", CLOSEST, NED),
    Experiment("closest-sca", CLOSEST, SCA),
    Experiment("cognate-ned", COGNATE, NED),
    Experiment("cognate-sca", COGNATE, SCA),
    Experiment("classifier", CLASSIFIER, BOTH),
)

AD_HOC_EXPERIMENTS = (
    Experiment("classifier-logistic", CLASSIFIER, BOTH, loss_kind=clf.LOGISTIC),
    Experiment("classifier-balanced", CLASSIFIER, BOTH, class_weights=clf.BALANCED),
    Experiment("closest-sca-per-language", CLOSEST_PER_LANGUAGE, SCA),
)

EXPERIMENTS = {e.label: e for e in MAIN_EXPERIMENTS + AD_HOC_EXPERIMENTS}


@dataclass
class ExperimentResult:
    experiment: Experiment
    folds: list[MetricsReport] = field(default_factory=list)
    predictions: list[Prediction] = field(default_factory=list)
    parameters: list[dict] = field(default_factory=list)
    seconds: float = 0.0
    failure: str | None = None
    # mean over folds of the per-language macro average (per-language runs only)
    macro: MetricsReport | None = None

    @property
    def label(self) -> str:
        return self.experiment.label

    @property
    def failed(self) -> bool:
        return self.failure is not None

    @property
    def summary(self) -> MetricsReport | None:
        if self.failed or not self.folds:
            return None
        return mean_report(self.folds, scope=f"{self.label}/mean")


@dataclass
class CrossValidationResult:
    plan: FoldPlan
    results: dict[str, ExperimentResult]

    def __getitem__(self, label: str) -> ExperimentResult:
        return self.results[label]

    def labels(self) -> list[str]:
        return sorted(self.results)

    def succeeded(self) -> list[ExperimentResult]:
        return [self.results[k] for k in self.labels() if not self.results[k].failed]

    def matrix(self, metric: str) -> tuple[list[str], list[list[float]]]:
        """Experiments x folds matrix of one metric, undefined values as 0."""
        labels, rows = [], []
        for res in self.succeeded():
            labels.append(res.label)
            rows.append([r.metric(metric) or 0.0 for r in res.folds])
        return labels, rows

    def anova(self, metric: str) -> AnovaResult:
        return blocked_anova(self.matrix(metric)[1])

    def deviations(self, metric: str) -> dict[str, float]:
        """Each experiment's fold mean minus the grand mean over experiments."""
        labels, rows = self.matrix(metric)
        means = [fmean(r) for r in rows]
        grand = fmean(means)
        return {label: mu - grand for label, mu in zip(labels, means)}


class Workbench:
    """Distance records and linkage results computed once per wordlist."""

    def __init__(self, wl: Wordlist, distances: DistanceCache | None = None):
        self.wl = wl
        self.distances = distances or DistanceCache()
        self._records: dict[str, list[DistanceRecord]] | None = None
        self._joins: dict[str, dict[str, list[DistanceRecord]]] = {}

    def _by_concept(self, records):
        out: dict[str, list[DistanceRecord]] = {c: [] for c in self.wl.concepts}
        for r in records:
            out[r.concept].append(r)
        return out

    def records(self, concepts: Sequence[str]) -> list[DistanceRecord]:
        if self._records is None:
            self._records = self._by_concept(
                build_distance_records(self.wl, distances=self.distances)
            )
        return [r for c in concepts for r in self._records[c]]

    def join_records(self, concepts: Sequence[str], measure: str) -> list[DistanceRecord]:
        if measure not in self._joins:
            self._joins[measure] = self._by_concept(
                cognate_join_records(self.wl, self.wl.concepts, measure, self.distances)
            )
        return [r for c in concepts for r in self._joins[measure][c]]


def run_fold(
    bench: Workbench, exp: Experiment, train: Sequence[str], test: Sequence[str]
) -> tuple[list[Prediction], dict]:
    """Fit on the training concepts and predict the test concepts."""
    test_records = bench.records(test)
    if exp.method == CLOSEST:
        theta = calibrate_threshold(bench.records(train), exp.measure)
        return detect_closest_match(test_records, exp.measure, theta), {"threshold": theta}
    if exp.method == CLOSEST_PER_LANGUAGE:
        thresholds, combined = calibrate_per_language(bench.records(train), exp.measure)
        preds = [
            detect_closest_match([r], exp.measure, thresholds.get(r.language, combined))[0]
            for r in test_records
        ]
        return preds, {"threshold": combined, "thresholds": thresholds}
    if exp.method == COGNATE:
        theta = calibrate_threshold(bench.join_records(train, exp.measure), exp.measure)
        preds = detect_cognate_based(bench.wl, test, exp.measure, theta, bench.distances)
        return preds, {"threshold": theta}
    features = clf.featurize(bench.records(train), bench.wl.target_languages)
    model = clf.train(features, exp.loss_kind, exp.class_weights, exp.hyperparameters)
    preds = clf.predict(model, clf.featurize(test_records, bench.wl.target_languages))
    return preds, {"weights": [float(w) for w in model.weights], "bias": model.bias}


def _macro(preds, gold, languages, scope):
    reports = []
    for language, ids in languages.items():
        sub = [p for p in preds if p.form_id in ids]
        if sub:
            reports.append(score(sub, {i: gold[i] for i in ids}, scope=language))
    return mean_report(reports, scope=scope)


def cross_validate(
    wl: Wordlist,
    plan: FoldPlan,
    experiments: Sequence[Experiment],
    bench: Workbench | None = None,
) -> CrossValidationResult:
    """Run every experiment on every fold of the plan.

    An experiment whose calibration or training fails on any fold is marked
    failed with the cause; the others still run.
    """
    if plan.concepts != set(wl.concepts):
        raise ValueError("fold plan does not cover the wordlist's concepts")
    bench = bench or Workbench(wl)
    results = {}
    for exp in experiments:
        res = ExperimentResult(exp)
        macro_folds = []
        start = time.perf_counter()
        for i in range(plan.k):
            test = plan.test_concepts(i)
            gold = {f.id: f.borrowed_from_donor for f in wl.recipient_forms(test)}
            try:
                preds, params = run_fold(bench, exp, plan.train_concepts(i), test)
            except (ValueError, ArithmeticError) as exc:
                res.failure = f"fold {i}: {exc}"
                log.warning("experiment %s failed on fold %d: %s", exp.label, i, exc)
                break
            res.folds.append(score(preds, gold, scope=f"{exp.label}/fold{i}"))
            res.predictions.extend(preds)
            res.parameters.append(params)
            if exp.method == CLOSEST_PER_LANGUAGE:
                languages: dict[str, set[str]] = {}
                for f in wl.recipient_forms(test):
                    languages.setdefault(f.language, set()).add(f.id)
                macro_folds.append(_macro(preds, gold, languages, f"{exp.label}/fold{i}/macro"))
        res.seconds = time.perf_counter() - start
        if macro_folds and not res.failed:
            res.macro = mean_report(macro_folds, scope=f"{exp.label}/macro")
        results[exp.label] = res
    return CrossValidationResult(plan, results)


def fit_full(bench: Workbench, exp: Experiment) -> tuple[list[Prediction], dict]:
    """Train or calibrate on every concept and predict the same data."""
    concepts = bench.wl.concepts
    return run_fold(bench, exp, concepts, concepts)


__all__ = [
    "Experiment", "ExperimentResult", "CrossValidationResult", "Workbench",
    "MAIN_EXPERIMENTS", "AD_HOC_EXPERIMENTS", "EXPERIMENTS", "METRICS",
    "cross_validate", "fit_full", "run_fold",
]
