"""Fold planning, scoring, cross-validation and reporting."""
from .crossval import (
    AD_HOC_EXPERIMENTS, EXPERIMENTS, MAIN_EXPERIMENTS, CrossValidationResult,
    Experiment, ExperimentResult, Workbench, cross_validate, fit_full,
)
from .folds import FoldPlan, PlanError, load_plan, plan_folds
from .metrics import AlignmentError, MetricsReport, mean_report, pooled_report, score
from .reports import error_report, per_language_report
from .stats import AnovaResult, DegenerateVarianceError, blocked_anova, pearson

__all__ = [
    "AD_HOC_EXPERIMENTS", "EXPERIMENTS", "MAIN_EXPERIMENTS", "CrossValidationResult",
    "Experiment", "ExperimentResult", "Workbench", "cross_validate", "fit_full",
    "FoldPlan", "PlanError", "load_plan", "plan_folds",
    "AlignmentError", "MetricsReport", "mean_report", "pooled_report", "score",
    "error_report", "per_language_report",
    "AnovaResult", "DegenerateVarianceError", "blocked_anova", "pearson",
]
