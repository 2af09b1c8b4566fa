"""Linear classifiers over distance features.

Each recipient form becomes the vector ``[ned, sca, one-hot language]``.
Models are trained by deterministic full-batch gradient descent on either
the hinge loss (a linear SVM) or the logistic loss, with L2 regularization
on the weights.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .detectors import DistanceRecord, Prediction

log = logging.getLogger(__name__)

HINGE = "hinge"
LOGISTIC = "logistic"
UNIFORM = "uniform"
BALANCED = "balanced"

MODEL_SCHEMA = "loanfinder.linear-model/1"


class TrainingError(ValueError):
    pass


class DivergenceError(TrainingError):
    def __init__(self, epoch: int):
        super().__init__(f"loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparameters:
    learning_rate: float = 1.0
    epochs: int = 2000
    l2: float = 1e-3
    seed: int = 42


@dataclass
class FeatureMatrix:
    form_ids: list[str]
    X: np.ndarray
    labels: np.ndarray
    present: np.ndarray
    language_index: tuple[str, ...] = ()

    def __len__(self):
        return len(self.form_ids)

    @property
    def width(self) -> int:
        return self.X.shape[1]


def featurize(records: Sequence[DistanceRecord], language_index: Sequence[str]) -> FeatureMatrix:
    """Pack records into a feature matrix.

    Records without donor distances get ``present=False`` and maximal
    distances; they are excluded from training and never flagged.
    """
    language_index = tuple(language_index)
    if not language_index:
        raise ValueError("language_index must not be empty")
    column = {lang: 2 + i for i, lang in enumerate(language_index)}
    X = np.zeros((len(records), 2 + len(language_index)))
    labels = np.zeros(len(records), dtype=bool)
    present = np.zeros(len(records), dtype=bool)
    unseen = set()
    for row, r in enumerate(records):
        if r.present:
            X[row, 0], X[row, 1] = r.ned_min, r.sca_min
            present[row] = True
        else:
            X[row, :2] = 1.0
        labels[row] = r.gold
        col = column.get(r.language)
        if col is None:
            if r.language not in unseen:
                unseen.add(r.language)
                log.warning("language %r was not seen in training; no language feature", r.language)
        else:
            X[row, col] = 1.0
    return FeatureMatrix([r.form_id for r in records], X, labels, present, language_index)


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    loss_kind: str
    class_weights: str
    language_index: tuple[str, ...]
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)

    def decision(self, X: np.ndarray) -> np.ndarray:
        if X.ndim != 2 or X.shape[1] != len(self.weights):
            raise ShapeError(
                f"features have width {X.shape[-1]}, model expects {len(self.weights)}"
            )
        return X @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {
            "schema": MODEL_SCHEMA,
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "language_index": list(self.language_index),
            "loss_kind": self.loss_kind,
            "class_weights": self.class_weights,
            "hyperparameters": asdict(self.hyperparameters),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearModel":
        if data.get("schema") != MODEL_SCHEMA:
            raise ValueError(f"unsupported model schema {data.get('schema')!r}")
        model = cls(
            weights=np.asarray(data["weights"], dtype=float),
            bias=float(data["bias"]),
            loss_kind=data["loss_kind"],
            class_weights=data["class_weights"],
            language_index=tuple(data["language_index"]),
            hyperparameters=Hyperparameters(**data["hyperparameters"]),
        )
        if len(model.weights) != 2 + len(model.language_index):
            raise ShapeError("weight vector does not match the language index")
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def sample_weights(labels: np.ndarray, class_weights: str) -> np.ndarray:
    if class_weights == UNIFORM:
        return np.ones(len(labels))
    if class_weights == BALANCED:
        n = len(labels)
        n_pos = int(labels.sum())
        n_neg = n - n_pos
        return np.where(labels, n / (2 * n_pos), n / (2 * n_neg))
    raise ValueError(f"unknown class weighting {class_weights!r}")


def objective(
    params: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    loss_kind: str,
    l2: float,
) -> tuple[float, np.ndarray]:
    """Regularized empirical risk and its (sub)gradient.

    ``params`` is the weight vector with the bias appended; ``y`` holds
    labels in {-1, +1}. The bias is not regularized.
    """
    w, b = params[:-1], params[-1]
    margin = y * (X @ w + b)
    n = len(y)
    if loss_kind == HINGE:
        losses = np.maximum(0.0, 1.0 - margin)
        dmargin = np.where(margin < 1.0, -1.0, 0.0)
    elif loss_kind == LOGISTIC:
        losses = np.logaddexp(0.0, -margin)
        dmargin = -0.5 * (1.0 - np.tanh(0.5 * margin))  # -sigmoid(-margin)
    else:
        raise ValueError(f"unknown loss {loss_kind!r}")
    value = float(weights @ losses) / n + 0.5 * l2 * float(w @ w)
    coef = weights * dmargin * y / n
    grad = np.empty_like(params)
    grad[:-1] = X.T @ coef + l2 * w
    grad[-1] = coef.sum()
    return value, grad


def train(
    features: FeatureMatrix,
    loss_kind: str = HINGE,
    class_weights: str = UNIFORM,
    hyperparameters: Hyperparameters | None = None,
) -> LinearModel:
    hp = hyperparameters or Hyperparameters()
    X = features.X[features.present]
    labels = features.labels[features.present]
    if labels.all() or not labels.any():
        raise TrainingError("training data must contain both classes")
    y = np.where(labels, 1.0, -1.0)
    weights = sample_weights(labels, class_weights)

    rng = np.random.default_rng(hp.seed)
    params = np.concatenate([rng.normal(0.0, 0.01, X.shape[1]), [0.0]])
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(hp.epochs):
            value, grad = objective(params, X, y, weights, loss_kind, hp.l2)
            if not np.isfinite(value) or not np.all(np.isfinite(grad)):
                raise DivergenceError(epoch)
            params = params - hp.learning_rate * grad
    if not np.all(np.isfinite(params)):
        raise DivergenceError(hp.epochs)
    return LinearModel(
        weights=params[:-1].copy(),
        bias=float(params[-1]),
        loss_kind=loss_kind,
        class_weights=class_weights,
        language_index=features.language_index,
        hyperparameters=hp,
    )


def predict(model: LinearModel, features: FeatureMatrix) -> list[Prediction]:
    """Flag forms with a strictly positive decision value."""
    v = model.decision(features.X)
    return [
        Prediction(form_id, bool(present and value > 0.0), float(value))
        for form_id, value, present in zip(features.form_ids, v, features.present)
    ]
