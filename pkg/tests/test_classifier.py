import json
import math
import random

import numpy as np
import pytest

from loanfinder.classifier import (
    BALANCED, HINGE, LOGISTIC, UNIFORM, DivergenceError, FeatureMatrix, Hyperparameters,
    LinearModel, ShapeError, TrainingError, featurize, objective, predict, sample_weights, train,
)
from loanfinder.detectors import DistanceRecord, build_distance_records

LANGS = ("A", "B", "C", "D", "E", "F", "G")


def plain_objective(params, X, y, weights, loss_kind, l2):
    """Scalar loop version of the regularized risk."""
    w, b = list(params[:-1]), params[-1]
    total = 0.0
    for row, label, weight in zip(X, y, weights):
        margin = label * (sum(wi * xi for wi, xi in zip(w, row)) + b)
        if loss_kind == HINGE:
            loss = max(0.0, 1.0 - margin)
        else:
            loss = math.log1p(math.exp(-margin)) if margin > -30 else -margin
        total += weight * loss
    return total / len(y) + 0.5 * l2 * sum(wi * wi for wi in w)


def random_problem(rng, n=20, d=4):
    X = rng.random((n, d))
    y = np.where(rng.random(n) < 0.4, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    weights = rng.random(n) + 0.5
    return X, y, weights


def gradient_error(rng, loss_kind, eps=1e-5):
    """Worst central-difference error at a random point away from hinge kinks."""
    X, y, weights = random_problem(rng)
    while True:
        params = rng.normal(0, 1, X.shape[1] + 1)
        margin = y * (X @ params[:-1] + params[-1])
        if loss_kind != HINGE or np.min(np.abs(margin - 1.0)) > 1e-3:
            break
    value, grad = objective(params, X, y, weights, loss_kind, 1e-3)
    assert value == pytest.approx(plain_objective(params, X, y, weights, loss_kind, 1e-3), rel=1e-12)
    worst = 0.0
    for j in range(len(params)):
        step = np.zeros_like(params)
        step[j] = eps
        up = plain_objective(params + step, X, y, weights, loss_kind, 1e-3)
        down = plain_objective(params - step, X, y, weights, loss_kind, 1e-3)
        worst = max(worst, abs((up - down) / (2 * eps) - grad[j]))
    return worst


@pytest.mark.parametrize("loss_kind", [HINGE, LOGISTIC])
def test_gradient_matches_finite_differences(loss_kind):
    rng = np.random.default_rng(11)
    for _ in range(50):
        assert gradient_error(rng, loss_kind) < 1e-6


def test_featurize_layout():
    r = DistanceRecord("x", "B", "c", 0.2, 0.3, True)
    fm = featurize([r], LANGS)
    assert fm.X.tolist() == [[0.2, 0.3, 0, 1, 0, 0, 0, 0, 0]]
    assert fm.labels.tolist() == [True] and fm.present.tolist() == [True]
    assert fm.width == 9


def test_featurize_absent_and_unseen(caplog):
    fm = featurize([DistanceRecord("x", "Z", "c", None, None, True)], LANGS)
    assert fm.X.tolist() == [[1.0, 1.0, 0, 0, 0, 0, 0, 0, 0]]
    assert fm.present.tolist() == [False]
    assert "'Z'" in caplog.text


def separable(n=40):
    rng = random.Random(4)
    records = []
    for i in range(n):
        gold = i % 2 == 0
        d = rng.uniform(0.0, 0.3) if gold else rng.uniform(0.6, 1.0)
        records.append(DistanceRecord(str(i), LANGS[i % 7], "c", d, d, gold))
    return featurize(records, LANGS)


def accuracy(model, fm):
    preds = predict(model, fm)
    return np.mean([p.predicted == g for p, g in zip(preds, fm.labels)])


@pytest.mark.parametrize("loss_kind", [HINGE, LOGISTIC])
def test_separable_training_accuracy(loss_kind):
    fm = separable()
    model = train(fm, loss_kind)
    assert accuracy(model, fm) == 1.0
    # larger distance means less likely borrowed
    assert model.weights[0] + model.weights[1] < 0


def test_zero_weights_flag_nothing():
    fm = separable()
    model = LinearModel(np.zeros(9), 0.0, HINGE, UNIFORM, LANGS)
    preds = predict(model, fm)
    assert not any(p.predicted for p in preds)
    assert all(p.score == 0.0 for p in preds)


def test_positive_boundary_requires_strictly_positive():
    fm = featurize([DistanceRecord("x", "A", "c", 0.5, 0.5, True)], LANGS)
    w = np.zeros(9)
    w[0] = -1.0
    assert not predict(LinearModel(w, 0.5, HINGE, UNIFORM, LANGS), fm)[0].predicted
    assert predict(LinearModel(w, 0.5 + 1e-9, HINGE, UNIFORM, LANGS), fm)[0].predicted


def test_absent_never_flagged():
    fm = featurize([DistanceRecord("x", "A", "c", None, None, True)], LANGS)
    model = LinearModel(np.zeros(9), 5.0, HINGE, UNIFORM, LANGS)
    [p] = predict(model, fm)
    assert not p.predicted and p.score == 5.0


def test_shape_error():
    model = LinearModel(np.zeros(9), 0.0, HINGE, UNIFORM, LANGS)
    with pytest.raises(ShapeError):
        model.decision(np.zeros((3, 5)))


def test_one_class_training_data():
    fm = featurize([DistanceRecord(str(i), "A", "c", 0.1, 0.1, True) for i in range(5)], LANGS)
    with pytest.raises(TrainingError):
        train(fm)


def test_divergence_detected():
    fm = separable()
    with pytest.raises(DivergenceError):
        train(fm, LOGISTIC, hyperparameters=Hyperparameters(learning_rate=1e200, epochs=50))


def test_balanced_weights():
    labels = np.array([True, False, False, False])
    w = sample_weights(labels, BALANCED)
    assert w.tolist() == [2.0, 4 / 6, 4 / 6, 4 / 6]
    assert sample_weights(labels, UNIFORM).tolist() == [1.0] * 4
    # each class carries half the total weight
    assert w[labels].sum() == pytest.approx(w[~labels].sum())


def test_balanced_raises_recall(synthetic_wl):
    fm = featurize(build_distance_records(synthetic_wl), synthetic_wl.target_languages)

    def recall(model):
        preds = predict(model, fm)
        hits = sum(p.predicted for p, g in zip(preds, fm.labels) if g)
        return hits / fm.labels.sum()

    assert recall(train(fm, HINGE, BALANCED)) >= recall(train(fm, HINGE, UNIFORM))


def test_training_is_deterministic(synthetic_wl):
    fm = featurize(build_distance_records(synthetic_wl), synthetic_wl.target_languages)
    a, b = train(fm), train(fm)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias
    c = train(fm, hyperparameters=Hyperparameters(seed=43))
    assert c.weights.tobytes() != a.weights.tobytes()


def test_model_round_trip(tmp_path):
    model = train(separable(), LOGISTIC, BALANCED)
    path = tmp_path / "model.json"
    model.save(path)
    again = LinearModel.load(path)
    assert again.weights.tolist() == model.weights.tolist()
    assert again.bias == model.bias
    assert again.language_index == LANGS and again.loss_kind == LOGISTIC
    assert again.hyperparameters == model.hyperparameters
    data = json.loads(path.read_text())
    data["schema"] = "other"
    with pytest.raises(ValueError):
        LinearModel.from_dict(data)
    data = model.to_dict()
    data["weights"] = data["weights"][:3]
    with pytest.raises(ShapeError):
        LinearModel.from_dict(data)


def test_feature_matrix_len():
    assert len(FeatureMatrix(["a"], np.zeros((1, 3)), np.zeros(1, bool), np.ones(1, bool))) == 1
