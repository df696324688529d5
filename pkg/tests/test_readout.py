import numpy as np
import pytest

from qelm_lab.errors import ValidationError
from qelm_lab.readout import (
    BaggedTrees,
    DecisionTree,
    fit_linear,
    fit_logistic,
    fit_readout,
    readout_from_dict,
)


def test_linear_identity_data():
    x = np.linspace(0.0, 1.0, 20).reshape(-1, 1)
    model = fit_linear(x, x[:, 0])
    assert abs(model.weights[0] - 1.0) < 1e-6
    assert abs(model.intercept) < 1e-6


def test_linear_matches_lstsq_oracle():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(40, 3))
    y = x @ np.array([1.5, -2.0, 0.3]) + 0.7 + 0.01 * rng.normal(size=40)
    model = fit_linear(x, y, ridge=0.0)
    design = np.hstack([x, np.ones((40, 1))])
    oracle, *_ = np.linalg.lstsq(design, y, rcond=None)
    assert np.abs(model.weights - oracle[:3]).max() < 1e-8
    assert abs(model.intercept - oracle[3]) < 1e-8


def test_logistic_separable_set_reaches_full_accuracy():
    rng = np.random.default_rng(3)
    x0 = rng.uniform(0.0, 0.4, size=(30, 2))
    x1 = rng.uniform(0.6, 1.0, size=(30, 2))
    x = np.vstack([x0, x1])
    y = np.array([0] * 30 + [1] * 30)
    model = fit_logistic(x, y)
    assert (model.predict(x) == y).all()
    probs = model.predict_proba(x)
    assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-9


def test_logistic_degenerate_targets_flagged():
    x = np.zeros((5, 2))
    model = fit_logistic(x, np.ones(5))
    assert model.degenerate
    assert model.predict_proba(x)[:, 1].min() > 0.99


def test_tree_learns_xor_with_depth_two():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    tree = DecisionTree("classification", max_depth=5).fit(x, y)
    assert tree.depth() >= 2
    assert (tree.predict(x) == y).all()


def test_tree_root_split_matches_exhaustive_oracle():
    rng = np.random.default_rng(11)
    x = rng.uniform(size=(60, 2))
    y = (x[:, 0] + 0.3 * x[:, 1] > 0.8).astype(int)
    tree = DecisionTree("classification", max_depth=1).fit(x, y)
    root = tree.root

    def gini(labels):
        if len(labels) == 0:
            return 0.0
        f1 = labels.mean()
        return 1.0 - f1**2 - (1 - f1) ** 2

    best = None
    for j in range(2):
        xs = np.unique(x[:, j])
        for lo, hi in zip(xs, xs[1:]):
            thr = (lo + hi) / 2
            mask = x[:, j] <= thr
            score = (mask.sum() * gini(y[mask]) + (~mask).sum() * gini(y[~mask])) / len(y)
            if best is None or score < best - 1e-15:
                best = score
    mask = x[:, root.feature] <= root.threshold
    score = (mask.sum() * gini(y[mask]) + (~mask).sum() * gini(y[~mask])) / len(y)
    assert score == pytest.approx(best)


def test_regression_tree_reduces_error():
    rng = np.random.default_rng(4)
    x = rng.uniform(size=(200, 1))
    y = np.where(x[:, 0] > 0.5, 2.0, -1.0) + 0.05 * rng.normal(size=200)
    tree = DecisionTree("regression", max_depth=3).fit(x, y)
    pred = tree.predict(x)
    assert np.mean((pred - y) ** 2) < 0.25 * np.var(y)


def test_bagged_trees_are_seed_deterministic():
    rng = np.random.default_rng(5)
    x = rng.uniform(size=(80, 2))
    y = x[:, 0] * 2 - x[:, 1]
    a = BaggedTrees(n_trees=5, max_depth=4, seed=9).fit(x, y).predict(x)
    b = BaggedTrees(n_trees=5, max_depth=4, seed=9).fit(x, y).predict(x)
    assert np.array_equal(a, b)


def test_fit_readout_dispatch_and_validation():
    x = np.array([[0.0], [1.0]])
    assert fit_readout(x, np.array([0.0, 1.0]), "linear").predict(x)[1] == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        fit_readout(x, np.array([0.0]), "linear")
    with pytest.raises(ValidationError):
        fit_readout(x[:1], np.array([0.0]), "linear")
    with pytest.raises(ValidationError):
        fit_readout(x, np.array([0.0, 1.0]), "mystery")


def test_readout_serialization_round_trip():
    rng = np.random.default_rng(6)
    x = rng.uniform(size=(30, 2))
    for kind, y in (
        ("linear", x[:, 0] * 3 - 1),
        ("logistic", (x[:, 0] > 0.5).astype(float)),
        ("tree", (x[:, 1] > 0.5).astype(float)),
    ):
        model = fit_readout(x, y, kind)
        clone = readout_from_dict(model.to_dict())
        if kind == "linear":
            assert np.allclose(model.predict(x), clone.predict(x))
        else:
            assert np.allclose(model.predict_proba(x), clone.predict_proba(x))
