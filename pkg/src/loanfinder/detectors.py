"""Threshold-based borrowing detectors.

Closest Match flags a recipient form when its smallest distance to a
same-concept donor form falls below a threshold. Cognate-Based clusters all
forms of a concept by average linkage and flags recipient forms that share
a cluster with a donor form. Both thresholds are estimated on training data
by a grid search maximizing F1.
"""
from __future__ import annotations

import logging
from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

from .phonology import AlignmentScoreScheme, SoundClassModel, default_model, ned, sca_distance
from .wordlist import Wordlist, WordForm, concept_view

log = logging.getLogger(__name__)

NED = "ned"
SCA = "sca"
MEASURES = (NED, SCA)

THRESHOLD_GRID = tuple(i / 100 for i in range(101))


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class DistanceRecord:
    form_id: str
    language: str
    concept: str
    ned_min: float | None
    sca_min: float | None
    gold: bool

    def distance(self, measure: str) -> float | None:
        if measure == NED:
            return self.ned_min
        if measure == SCA:
            return self.sca_min
        raise ValueError(f"unknown measure {measure!r}")

    @property
    def present(self) -> bool:
        return self.ned_min is not None


@dataclass(frozen=True)
class Prediction:
    form_id: str
    predicted: bool
    score: float


class DistanceCache:
    """Memoized pairwise distances keyed by segment tuples."""

    def __init__(self, model: SoundClassModel | None = None, scheme: AlignmentScoreScheme | None = None):
        self.model = model or default_model()
        self.scheme = scheme or AlignmentScoreScheme()
        self._memo: dict[tuple, float] = {}

    def __call__(self, measure: str, a: Sequence[str], b: Sequence[str]) -> float:
        a, b = tuple(a), tuple(b)
        if b < a:
            a, b = b, a
        key = (measure, a, b)
        value = self._memo.get(key)
        if value is None:
            if measure == NED:
                value = ned(a, b)
            elif measure == SCA:
                value = sca_distance(a, b, self.model, self.scheme)
            else:
                raise ValueError(f"unknown measure {measure!r}")
            self._memo[key] = value
        return value


def build_distance_records(
    wl: Wordlist, concepts: Iterable[str] | None = None, distances: DistanceCache | None = None
) -> list[DistanceRecord]:
    """One record per recipient form, holding its minimum distance to the
    donor forms of the same concept under both measures."""
    distances = distances or DistanceCache()
    records = []
    for concept in (wl.concepts if concepts is None else concepts):
        donors, recipients = concept_view(wl, concept)
        for form in recipients:
            if donors:
                ned_min = min(distances(NED, form.segments, d.segments) for d in donors)
                sca_min = min(distances(SCA, form.segments, d.segments) for d in donors)
            else:
                ned_min = sca_min = None
            records.append(DistanceRecord(
                form.id, form.language, concept, ned_min, sca_min, form.borrowed_from_donor
            ))
    return records


def _f1(tp: int, fp: int, fn: int) -> float:
    if tp == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def calibrate_threshold(records: Sequence[DistanceRecord], measure: str) -> float:
    """Grid value in {0.00, 0.01, ..., 1.00} with the best training F1.

    A record counts as predicted borrowed iff its distance is below the
    threshold. Ties go to the smallest threshold.
    """
    scored = [(r.distance(measure), r.gold) for r in records]
    pos = sorted(d for d, g in scored if g and d is not None)
    neg = sorted(d for d, g in scored if not g and d is not None)
    if not pos or not neg:
        raise CalibrationError("calibration needs positive and negative examples with distances")
    positives = sum(g for _, g in scored)
    best, best_f1 = THRESHOLD_GRID[0], -1.0
    for theta in THRESHOLD_GRID:
        tp = bisect_left(pos, theta)
        fp = bisect_left(neg, theta)
        f1 = _f1(tp, fp, positives - tp)
        if f1 > best_f1:
            best, best_f1 = theta, f1
    return best


def detect_closest_match(
    records: Iterable[DistanceRecord], measure: str, threshold: float
) -> list[Prediction]:
    if not 0.0 <= threshold:
        raise ValueError("threshold must be non-negative")
    out = []
    for r in records:
        d = r.distance(measure)
        if d is None:
            out.append(Prediction(r.form_id, False, 1.0))
        else:
            out.append(Prediction(r.form_id, d < threshold, d))
    return out


def calibrate_per_language(
    records: Sequence[DistanceRecord], measure: str
) -> tuple[dict[str, float], float]:
    """Per-language thresholds plus the combined threshold used as fallback."""
    combined = calibrate_threshold(records, measure)
    by_language: dict[str, list[DistanceRecord]] = {}
    for r in records:
        by_language.setdefault(r.language, []).append(r)
    thresholds = {}
    for language, subset in by_language.items():
        try:
            thresholds[language] = calibrate_threshold(subset, measure)
        except CalibrationError:
            log.warning("%s: one-class training data, using combined threshold %.2f",
                        language, combined)
            thresholds[language] = combined
    return thresholds, combined


def detect_per_language_closest(
    train: Sequence[DistanceRecord], test: Iterable[DistanceRecord], measure: str
) -> list[Prediction]:
    """Closest Match with one threshold calibrated per target language."""
    thresholds, combined = calibrate_per_language(train, measure)
    out = []
    for r in test:
        theta = thresholds.get(r.language, combined)
        out.extend(detect_closest_match([r], measure, theta))
    return out


# --- average-linkage clustering ------------------------------------------


def _pair_key(a: frozenset, b: frozenset, label: dict) -> tuple[str, str]:
    x, y = label[a], label[b]
    return (x, y) if x <= y else (y, x)


def _average(a: frozenset, b: frozenset, dist: Callable[[str, str], float]) -> float:
    # sorted members keep the float summation order independent of hashing
    return sum(dist(x, y) for x in sorted(a) for y in sorted(b)) / (len(a) * len(b))


def linkage(ids: Sequence[str], dist: Callable[[str, str], float]) -> list[tuple[frozenset, frozenset, float]]:
    """Full average-linkage merge sequence.

    Each step merges the two clusters with the smallest mean pairwise
    distance; ties go to the lexicographically smallest pair of cluster
    labels, a cluster's label being its smallest member id.
    """
    clusters = [frozenset([i]) for i in sorted(ids)]
    label = {c: min(c) for c in clusters}
    cache: dict[frozenset, float] = {}

    def between(a, b):
        key = frozenset((a, b))
        if key not in cache:
            cache[key] = _average(a, b, dist)
        return cache[key]

    merges = []
    while len(clusters) > 1:
        best = None
        for i, a in enumerate(clusters):
            for b in clusters[i + 1:]:
                cand = (between(a, b), _pair_key(a, b, label), a, b)
                if best is None or cand[:2] < best[:2]:
                    best = cand
        height, _, a, b = best
        merged = a | b
        label[merged] = min(label[a], label[b])
        clusters = [c for c in clusters if c is not a and c is not b] + [merged]
        merges.append((a, b, height))
    return merges


def flat_clusters(ids: Sequence[str], dist: Callable[[str, str], float], threshold: float) -> list[frozenset]:
    """Merge clusters while the smallest average distance is below threshold."""
    clusters = {frozenset([i]) for i in ids}
    for a, b, height in linkage(ids, dist):
        if not height < threshold:
            break
        clusters -= {a, b}
        clusters.add(a | b)
    return sorted(clusters, key=min)


def _concept_forms(wl: Wordlist, concept: str) -> tuple[dict[str, WordForm], set[str]]:
    donors, recipients = concept_view(wl, concept)
    forms = {f.id: f for f in donors + recipients}
    return forms, {f.id for f in donors}


def _concept_distance(forms, measure, distances):
    def dist(x, y):
        return distances(measure, forms[x].segments, forms[y].segments)
    return dist


def detect_cognate_based(
    wl: Wordlist,
    concepts: Iterable[str],
    measure: str,
    threshold: float,
    distances: DistanceCache | None = None,
) -> list[Prediction]:
    """Flag recipient forms clustered together with a donor form.

    The score of a form is its mean distance to the donor members of its
    cluster, 1.0 when the cluster holds no donor form.
    """
    distances = distances or DistanceCache()
    out = []
    for concept in concepts:
        forms, donor_ids = _concept_forms(wl, concept)
        dist = _concept_distance(forms, measure, distances)
        for cluster in flat_clusters(list(forms), dist, threshold):
            donors_here = cluster & donor_ids
            for form_id in sorted(cluster - donor_ids):
                if donors_here:
                    score = sum(dist(form_id, d) for d in donors_here) / len(donors_here)
                    out.append(Prediction(form_id, True, score))
                else:
                    out.append(Prediction(form_id, False, 1.0))
    order = {f.id: n for n, f in enumerate(wl.forms)}
    out.sort(key=lambda p: order[p.form_id])
    return out


def cognate_join_records(
    wl: Wordlist,
    concepts: Iterable[str],
    measure: str,
    distances: DistanceCache | None = None,
) -> list[DistanceRecord]:
    """Records whose distance fields hold the linkage height (under
    ``measure``) at which the form first shares a cluster with a donor form.

    Cognate-Based prediction at threshold t flags a form iff this height is
    below t, so these records let ``calibrate_threshold`` tune the
    clustering threshold without re-clustering for every grid value.
    """
    distances = distances or DistanceCache()
    records = []
    for concept in concepts:
        forms, donor_ids = _concept_forms(wl, concept)
        joined: dict[str, float] = {}
        if donor_ids:
            dist = _concept_distance(forms, measure, distances)
            level = 0.0
            for a, b, height in linkage(list(forms), dist):
                # merges continue only while every earlier height is below t
                level = max(level, height)
                if a & donor_ids and not b & donor_ids:
                    newly = b
                elif b & donor_ids and not a & donor_ids:
                    newly = a
                else:
                    continue
                for form_id in newly:
                    joined[form_id] = level
        for form_id, form in forms.items():
            if form_id in donor_ids:
                continue
            height = joined.get(form_id)
            rec = DistanceRecord(form_id, form.language, concept, None, None,
                                 form.borrowed_from_donor)
            if height is not None:
                rec = replace(rec, ned_min=height, sca_min=height)
            records.append(rec)
    return records
