"""Per-language results, error candidates, and TSV/JSON writers."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..detectors import NED, SCA, DistanceCache, Prediction
from ..wordlist import Wordlist, borrowing_rate, concept_view
from .crossval import CrossValidationResult
from .metrics import METRICS, MetricsReport, mean_report, pooled_report, score
from .stats import AnovaResult, pearson, pearson_one_sided_p


@dataclass(frozen=True)
class LanguageReport:
    language: str
    metrics: MetricsReport
    borrowing_rate: float


@dataclass(frozen=True)
class Correlation:
    metric: str
    r: float | None
    p_one_sided: float | None


@dataclass
class PerLanguageResult:
    languages: list[LanguageReport]
    micro: MetricsReport
    macro: MetricsReport
    mean_rate: float
    correlations: dict[str, Correlation]


def per_language_report(wl: Wordlist, predictions: Sequence[Prediction]) -> PerLanguageResult:
    """Metrics per target language and their correlation with borrowing rate."""
    by_id = {p.form_id: p for p in predictions}
    recipients = wl.recipient_forms()
    missing = [f.id for f in recipients if f.id not in by_id]
    if missing:
        raise ValueError(f"{len(missing)} recipient forms have no prediction, e.g. {missing[0]!r}")
    rows = []
    for language in wl.target_languages:
        forms = wl.forms_of(language)
        report = score(
            [by_id[f.id] for f in forms],
            {f.id: f.borrowed_from_donor for f in forms},
            scope=language,
        )
        rows.append(LanguageReport(language, report, borrowing_rate(wl, language)))
    rates = [r.borrowing_rate for r in rows]
    correlations = {}
    for metric in METRICS:
        values = [r.metrics.metric(metric) for r in rows]
        r = None if any(v is None for v in values) else pearson(values, rates)
        p = None if r is None else pearson_one_sided_p(r, len(rows))
        correlations[metric] = Correlation(metric, r, p)
    return PerLanguageResult(
        languages=rows,
        micro=pooled_report([r.metrics for r in rows], scope="pooled"),
        macro=mean_report([r.metrics for r in rows], scope="average"),
        mean_rate=sum(rates) / len(rates) if rates else 0.0,
        correlations=correlations,
    )


@dataclass(frozen=True)
class ErrorCandidate:
    error: str  # FN or FP
    form_id: str
    language: str
    concept: str
    form: str
    tokens: str
    score: float
    donor_id: str
    donor_form: str
    donor_tokens: str
    ned: float | None
    sca: float | None


def error_report(
    predictions: Iterable[Prediction], wl: Wordlist, distances: DistanceCache | None = None
) -> list[ErrorCandidate]:
    """False negatives and false positives with their nearest same-concept donor.

    The nearest donor is the one with the smallest SCA distance (NED breaks
    ties). Rows are sorted with false negatives first, then by distance
    descending; forms with no donor come first within their group.
    """
    distances = distances or DistanceCache()
    out = []
    for p in predictions:
        form = wl[p.form_id]
        if p.predicted == form.borrowed_from_donor:
            continue
        donors, _ = concept_view(wl, form.concept)
        best = None
        for d in donors:
            key = (distances(SCA, form.segments, d.segments),
                   distances(NED, form.segments, d.segments), d.id)
            if best is None or key < best[0]:
                best = (key, d)
        if best is None:
            donor_id = donor_form = donor_tokens = ""
            ned_d = sca_d = None
        else:
            (sca_d, ned_d, _), d = best
            donor_id, donor_form, donor_tokens = d.id, d.form, " ".join(d.segments)
        out.append(ErrorCandidate(
            "FN" if form.borrowed_from_donor else "FP",
            form.id, form.language, form.concept, form.form, " ".join(form.segments),
            p.score, donor_id, donor_form, donor_tokens, ned_d, sca_d,
        ))

    def order(row):
        distance = math.inf if row.sca is None else row.sca
        return (row.error != "FN", -distance, row.form_id)

    return sorted(out, key=order)


# --- writers ----------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _write_tsv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n",
                            quoting=csv.QUOTE_NONE, quotechar=None, escapechar="\\")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


METRIC_COLUMNS = ("TP", "FP", "FN", "TN", "PRECISION", "RECALL", "F1", "ACCURACY")


def _metric_cells(m: MetricsReport) -> list:
    return [m.tp, m.fp, m.fn, m.tn, m.precision, m.recall, m.f1, m.accuracy]


def write_predictions(path: str | Path, predictions: Iterable[Prediction], wl: Wordlist) -> None:
    rows = []
    for p in predictions:
        f = wl[p.form_id]
        rows.append([f.id, f.language, f.concept, f.borrowed_from_donor, p.predicted, p.score])
    _write_tsv(path, ("FORM_ID", "LANGUAGE", "CONCEPT", "GOLD", "PREDICTED", "SCORE"), rows)


def read_predictions(path: str | Path) -> list[Prediction]:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle, delimiter="\t", quoting=csv.QUOTE_NONE, escapechar="\\")
        return [
            Prediction(row["FORM_ID"], row["PREDICTED"] == "1", float(row["SCORE"]))
            for row in reader
        ]


def write_summary(path: str | Path, cv: CrossValidationResult) -> None:
    deviations = cv.deviations("f1") if len(cv.succeeded()) > 0 else {}
    rows = []
    for label in cv.labels():
        res = cv[label]
        if res.failed:
            rows.append([label, *[None] * len(METRIC_COLUMNS), None, res.failure])
            continue
        rows.append([label, *_metric_cells(res.summary), deviations.get(label), ""])
        if res.macro is not None:
            rows.append([f"{label} (macro by language)", *_metric_cells(res.macro), None, ""])
    _write_tsv(path, ("EXPERIMENT", *METRIC_COLUMNS, "F1_VS_GRAND_MEAN", "FAILURE"), rows)


def write_folds(path: str | Path, cv: CrossValidationResult) -> None:
    rows = []
    for label in cv.labels():
        res = cv[label]
        for i, (m, params) in enumerate(zip(res.folds, res.parameters)):
            rows.append([label, i, *_metric_cells(m), params.get("threshold")])
    _write_tsv(path, ("EXPERIMENT", "FOLD", *METRIC_COLUMNS, "THRESHOLD"), rows)


def write_timings(path: str | Path, cv: CrossValidationResult) -> None:
    _write_tsv(path, ("EXPERIMENT", "SECONDS"),
               [[label, cv[label].seconds] for label in cv.labels()])


def write_anova(path: str | Path, results: dict[str, AnovaResult | str]) -> None:
    data = {
        metric: (res if isinstance(res, str) else asdict(res))
        for metric, res in results.items()
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_languages(path: str | Path, result: PerLanguageResult) -> None:
    rows = [[r.language, *_metric_cells(r.metrics), r.borrowing_rate] for r in result.languages]
    if len(result.languages) > 0:
        rows.append(["Average", *_metric_cells(result.macro), result.mean_rate])
        rows.append(["Pooled", *_metric_cells(result.micro), None])
    _write_tsv(path, ("LANGUAGE", *METRIC_COLUMNS, "BORROWING_RATE"), rows)


def write_correlations(path: str | Path, result: PerLanguageResult) -> None:
    _write_tsv(path, ("METRIC", "PEARSON_R", "P_ONE_SIDED"),
               [[c.metric, c.r, c.p_one_sided] for c in result.correlations.values()])


def write_errors(path: str | Path, rows: Sequence[ErrorCandidate]) -> None:
    _write_tsv(
        path,
        ("ERROR", "FORM_ID", "LANGUAGE", "CONCEPT", "FORM", "TOKENS", "SCORE",
         "DONOR_ID", "DONOR_FORM", "DONOR_TOKENS", "NED", "SCA"),
        [[r.error, r.form_id, r.language, r.concept, r.form, r.tokens, r.score,
          r.donor_id, r.donor_form, r.donor_tokens, r.ned, r.sca] for r in rows],
    )
