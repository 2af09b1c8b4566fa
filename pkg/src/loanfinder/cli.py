"""Command line interface: prepare, detect, crossval, report."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import classifier as clf
from .detectors import (
    NED, SCA, DistanceCache, calibrate_threshold, detect_closest_match,
    detect_cognate_based,
)
from .evaluation import (
    AD_HOC_EXPERIMENTS, EXPERIMENTS, MAIN_EXPERIMENTS, Experiment, PlanError,
    Workbench, cross_validate, error_report, load_plan, per_language_report,
    plan_folds, score,
)
from .evaluation import reports
from .evaluation.crossval import BOTH, CLASSIFIER, CLOSEST, COGNATE
from .evaluation.stats import DegenerateVarianceError
from .phonology import default_model, load_sound_classes
from .prepare import CLEARLY_BORROWED, prepare_cldf
from .wordlist import WordlistError, load_wordlist

log = logging.getLogger("loanfinder")

THRESHOLD_SCHEMA = "loanfinder.threshold/1"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    wordlist: str | None = None
    donor: str = "Spanish"
    method: str = CLASSIFIER
    measure: str | None = None
    threshold: float | None = None
    k: int = 10
    seed: int = 42
    loss_kind: str = clf.HINGE
    class_weights: str = clf.UNIFORM
    output_dir: str = "out"
    sound_classes: str | None = None

    def validate(self) -> "RunConfig":
        if self.method not in (CLOSEST, COGNATE, CLASSIFIER):
            raise UsageError(f"unknown method {self.method!r}")
        if self.measure is None:
            self.measure = BOTH if self.method == CLASSIFIER else SCA
        if self.method == CLASSIFIER and self.measure != BOTH:
            raise UsageError("--method classifier requires --measure both")
        if self.method != CLASSIFIER and self.measure not in (NED, SCA):
            raise UsageError(f"--method {self.method} requires --measure ned or sca")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise UsageError("--threshold must lie in [0, 1]")
        if self.k < 2:
            raise UsageError("--k must be at least 2")
        if self.loss_kind not in (clf.HINGE, clf.LOGISTIC):
            raise UsageError(f"unknown loss kind {self.loss_kind!r}")
        if self.class_weights not in (clf.UNIFORM, clf.BALANCED):
            raise UsageError(f"unknown class weighting {self.class_weights!r}")
        if not self.wordlist:
            raise UsageError("--wordlist is required")
        return self


_CASTS = {"threshold": float, "k": int, "seed": int}


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise UsageError(f"{path}:{n}: unknown setting {key!r}")
        out[key] = _CASTS.get(key, str)(value)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return RunConfig(**values).validate()


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(outdir: Path, command: str, config: RunConfig, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": asdict(config),
        "seed": config.seed,
        "wordlist_sha256": _sha256(config.wordlist),
        "versions": {
            "loanfinder": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "hyperparameters": asdict(clf.Hyperparameters(seed=config.seed)),
    }
    manifest.update(extra or {})
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(config: RunConfig):
    try:
        wl = load_wordlist(config.wordlist, config.donor)
    except FileNotFoundError:
        raise UsageError(f"cannot read wordlist {config.wordlist}") from None
    model = load_sound_classes(config.sound_classes) if config.sound_classes else default_model()
    return wl, Workbench(wl, DistanceCache(model))


def _print_metrics(m) -> None:
    def fmt(v):
        return "n/a" if v is None else f"{v:.3f}"
    print(f"tp={m.tp} fp={m.fp} fn={m.fn} tn={m.tn} precision={fmt(m.precision)} "
          f"recall={fmt(m.recall)} f1={fmt(m.f1)} accuracy={fmt(m.accuracy)}")


def _full_data_predictions(config: RunConfig, wl, bench: Workbench, model_path: str | None):
    """Predictions over all recipient forms plus the fitted parameter file."""
    concepts = wl.concepts
    records = bench.records(concepts)
    if config.method == CLASSIFIER:
        if model_path:
            model = clf.LinearModel.load(model_path)
        else:
            model = clf.train(
                clf.featurize(records, wl.target_languages),
                config.loss_kind, config.class_weights,
                clf.Hyperparameters(seed=config.seed),
            )
        preds = clf.predict(model, clf.featurize(records, model.language_index))
        return preds, ("model.json", model.to_dict())

    threshold = config.threshold
    if threshold is None and model_path:
        data = json.loads(Path(model_path).read_text(encoding="utf-8"))
        if data.get("schema") != THRESHOLD_SCHEMA:
            raise UsageError(f"{model_path} is not a threshold file")
        threshold = float(data["threshold"])
    if threshold is None:
        if config.method == CLOSEST:
            threshold = calibrate_threshold(records, config.measure)
        else:
            threshold = calibrate_threshold(bench.join_records(concepts, config.measure), config.measure)
    if config.method == CLOSEST:
        preds = detect_closest_match(records, config.measure, threshold)
    else:
        preds = detect_cognate_based(wl, concepts, config.measure, threshold, bench.distances)
    payload = {"schema": THRESHOLD_SCHEMA, "method": config.method,
               "measure": config.measure, "threshold": threshold}
    return preds, ("threshold.json", payload)


def cmd_detect(args) -> int:
    config = build_config(args)
    wl, bench = _load(config)
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    preds, (name, payload) = _full_data_predictions(config, wl, bench, args.model)
    reports.write_predictions(outdir / "predictions.tsv", preds, wl)
    (outdir / name).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    write_manifest(outdir, "detect", config, {"model": args.model})
    gold = {f.id: f.borrowed_from_donor for f in wl.recipient_forms()}
    _print_metrics(score(preds, gold, scope="all"))
    return 0


def _select_experiments(choice: str) -> list[Experiment]:
    if choice == "all":
        return list(MAIN_EXPERIMENTS) + list(AD_HOC_EXPERIMENTS)
    if choice == "main":
        return list(MAIN_EXPERIMENTS)
    if choice == "adhoc":
        return list(AD_HOC_EXPERIMENTS)
    chosen = []
    for label in choice.split(","):
        label = label.strip()
        if label not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {label!r}; choose from {', '.join(EXPERIMENTS)}")
        chosen.append(EXPERIMENTS[label])
    return chosen


def cmd_crossval(args) -> int:
    config = build_config(args)
    experiments = _select_experiments(args.experiments)
    seeded = []
    for exp in experiments:
        hp = clf.Hyperparameters(seed=config.seed)
        seeded.append(Experiment(exp.label, exp.method, exp.measure, exp.loss_kind, exp.class_weights, hp))
    wl, bench = _load(config)
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    plan_path = outdir / "folds.json"
    if plan_path.exists():
        plan = load_plan(plan_path, wl.concepts)
        if (plan.k, plan.seed) != (config.k, config.seed):
            raise PlanError(
                f"{plan_path} was built with k={plan.k}, seed={plan.seed}; "
                f"delete it to regenerate with k={config.k}, seed={config.seed}"
            )
    else:
        plan = plan_folds(wl.concepts, config.k, config.seed)
        plan.save(plan_path)

    cv = cross_validate(wl, plan, seeded, bench)
    reports.write_summary(outdir / "summary.tsv", cv)
    reports.write_folds(outdir / "folds.tsv", cv)
    reports.write_timings(outdir / "timings.tsv", cv)
    anova = {}
    if len(cv.succeeded()) >= 2:
        for metric in ("precision", "recall", "f1", "accuracy"):
            try:
                anova[metric] = cv.anova(metric)
            except DegenerateVarianceError as exc:
                anova[metric] = str(exc)
    reports.write_anova(outdir / "anova.json", anova)
    for res in cv.succeeded():
        reports.write_predictions(outdir / f"predictions-{res.label}.tsv", res.predictions, wl)
    write_manifest(outdir, "crossval", config, {
        "experiments": [e.label for e in seeded], "fold_plan_sha256": plan.checksum(),
    })
    sys.stdout.write((outdir / "summary.tsv").read_text(encoding="utf-8"))
    failed = [r for r in cv.results.values() if r.failed]
    for res in failed:
        log.error("experiment %s failed: %s", res.label, res.failure)
    return 1 if failed else 0


def cmd_report(args) -> int:
    config = build_config(args)
    wl, bench = _load(config)
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.predictions:
        if not Path(args.predictions).exists():
            raise UsageError(f"predictions file {args.predictions} does not exist; "
                             "run detect first or omit --predictions to fit in-run")
        preds = reports.read_predictions(args.predictions)
    else:
        preds, (name, payload) = _full_data_predictions(config, wl, bench, args.model)
        (outdir / name).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    result = per_language_report(wl, preds)
    reports.write_languages(outdir / "languages.tsv", result)
    reports.write_correlations(outdir / "correlations.tsv", result)
    reports.write_errors(outdir / "errors.tsv", error_report(preds, wl, bench.distances))
    write_manifest(outdir, "report", config, {"predictions": args.predictions, "model": args.model})
    sys.stdout.write((outdir / "languages.tsv").read_text(encoding="utf-8"))
    return 0


def cmd_prepare(args) -> int:
    n = prepare_cldf(args.cldf, args.out, args.donor, args.min_score,
                     args.score_column, args.source_column)
    print(f"wrote {n} forms to {args.out}")
    return 0


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value settings file; flags take precedence")
    p.add_argument("--wordlist", help="wordlist TSV")
    p.add_argument("--donor", help="donor language (default Spanish)")
    p.add_argument("--method", choices=(CLOSEST, COGNATE, CLASSIFIER))
    p.add_argument("--measure", choices=(NED, SCA, BOTH))
    p.add_argument("--threshold", type=float, help="fixed threshold; skips calibration")
    p.add_argument("--k", type=int, help="number of folds (default 10)")
    p.add_argument("--seed", type=int, help="random seed (default 42)")
    p.add_argument("--loss-kind", dest="loss_kind", choices=(clf.HINGE, clf.LOGISTIC))
    p.add_argument("--class-weights", dest="class_weights", choices=(clf.UNIFORM, clf.BALANCED))
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--sound-classes", dest="sound_classes", help="SEGMENT/CLASS/KIND table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loanfinder", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="fit on all data and write predictions")
    _add_run_flags(p)
    p.add_argument("--model", help="saved model.json or threshold.json to apply instead of fitting")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("crossval", help="concept-blocked cross-validation")
    _add_run_flags(p)
    p.add_argument("--experiments", default="main",
                   help="main, adhoc, all, or a comma list of experiment labels")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("report", help="per-language metrics and error candidates")
    _add_run_flags(p)
    p.add_argument("--predictions", help="predictions TSV from detect")
    p.add_argument("--model", help="saved model.json or threshold.json")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("prepare", help="build the wordlist TSV from a CLDF export")
    p.add_argument("--cldf", required=True, help="directory holding forms.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--donor", default="Spanish")
    p.add_argument("--min-score", dest="min_score", type=float, default=CLEARLY_BORROWED)
    p.add_argument("--score-column", dest="score_column")
    p.add_argument("--source-column", dest="source_column")
    p.set_defaults(func=cmd_prepare)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s: %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (PlanError, WordlistError, clf.TrainingError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
