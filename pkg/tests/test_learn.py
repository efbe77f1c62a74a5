import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import matrix_from
from shortspam.errors import FeatureMismatchError, ModelFormatError, ModelVersionError, TrainingError
from shortspam.features import ALL_FEATURES, FeatureVector, Mode
from shortspam.learn import (
    Model,
    TrainParams,
    fit_naive_bayes,
    grow_tree,
    load_model,
    loads_model,
    predict,
    predict_matrix,
    predict_scores,
    save_model,
    train,
    train_decision_tree,
    train_naive_bayes,
    train_random_forest,
)
from shortspam.model import Label

NAMES = ("x",)


# -- naive Bayes ---------------------------------------------------------------


def two_clusters():
    # class B (malicious) at 10, class A (benign) at 0
    return fit_naive_bayes(np.array([[0.0], [0.0], [10.0], [10.0]]), np.array([0, 0, 1, 1]), NAMES)


def test_nb_symmetric_gaussians():
    model = two_clusters()
    eps = 1e-6
    lo = predict_scores(model, np.array([[5 - eps]]))[0]
    hi = predict_scores(model, np.array([[5 + eps]]))[0]
    assert lo < 0.5 < hi
    s0 = predict_scores(model, np.array([[0.0]]))[0]
    assert s0 < 0.5


def test_nb_constant_feature_priors_decide():
    X = np.array([[1.0, 3.0]] * 10)
    y = np.array([1] * 9 + [0])
    model = fit_naive_bayes(X, y, ("a", "b"))
    s = predict_scores(model, np.array([[1.0, 3.0], [100.0, -5.0]]))
    assert s == pytest.approx([0.9, 0.9])


def test_nb_two_row_posterior_by_hand():
    # 90/10 imbalance with an uninformative feature: posterior = prior
    X = np.array([[2.0]] * 10)
    y = np.array([1] + [0] * 9)
    model = fit_naive_bayes(X, y, NAMES)
    score = predict_scores(model, np.array([[2.0]]))[0]
    assert score == pytest.approx(0.1, abs=1e-12)
    assert predict_scores(model, np.array([[2.0]]))[0] < 0.5


def test_nb_all_missing_is_prior():
    X = np.array([[0.0, 1.0], [1.0, np.nan], [5.0, 2.0], [6.0, 3.0]])
    y = np.array([0, 0, 1, 1])
    model = fit_naive_bayes(X, y, ("a", "b"))
    assert model.parameters["missing_skipped"] == 1
    assert predict_scores(model, np.array([[np.nan, np.nan]]))[0] == pytest.approx(0.5)


def test_nb_matches_hand_formula():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    y = (rng.random(30) < 0.4).astype(int)
    model = fit_naive_bayes(X, y, ("a", "b", "c"))
    x = np.array([0.3, -1.2, 0.7])

    def loglik(cls):
        rows = X[y == cls]
        total = math.log(len(rows) / len(X))
        for j in range(3):
            mu = rows[:, j].mean()
            var = ((rows[:, j] - mu) ** 2).mean()
            total += -0.5 * math.log(2 * math.pi * var) - (x[j] - mu) ** 2 / (2 * var)
        return total

    expected = 1 / (1 + math.exp(loglik(0) - loglik(1)))
    assert predict_scores(model, x[None, :])[0] == pytest.approx(expected, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.permutations(range(4)))
def test_nb_feature_order_invariant(seed, perm):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 4)) * rng.uniform(0.1, 100, size=4)
    X[rng.random(X.shape) < 0.1] = np.nan
    y = np.array([0, 1] * 10)
    names = ("a", "b", "c", "d")
    perm = list(perm)
    m1 = fit_naive_bayes(X, y, names)
    m2 = fit_naive_bayes(X[:, perm], y, tuple(names[i] for i in perm))
    Z = rng.normal(size=(10, 4))
    assert np.array_equal(predict_scores(m1, Z, names), predict_scores(m2, Z, names))


# -- trees ----------------------------------------------------------------------


def test_tree_threshold_on_young_domains(backend):
    ages = np.array([1.0, 5, 12, 29, 31, 45, 100, 400])
    y = (ages < 30).astype(np.uint8)
    t = grow_tree(ages[:, None], y, backend=backend)
    assert t.n_nodes == 3 and t.feature[0] == 0
    assert 29 < t.threshold[0] < 31
    # brute force: every midpoint is scored, ours is among the best
    best = max(g for _, _, g in oracles.threshold_gains(ages[:, None].tolist(), y.tolist()))
    assert oracles.split_gain(ages[:, None].tolist(), y.tolist(), 0, t.threshold[0]) == pytest.approx(best)
    leaves = t.apply(ages[:, None], backend)
    assert np.array_equal(t.malicious_fraction(leaves) >= 0.5, y.astype(bool))


def test_tree_pure_is_leaf(backend):
    t = grow_tree(np.array([[1.0], [2.0], [3.0]]), np.array([1, 1, 1]), backend=backend)
    assert t.n_nodes == 1 and t.feature[0] == -1


def test_tree_xor(backend):
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0], dtype=np.uint8)
    t = grow_tree(X, y, backend=backend)
    assert t.feature[0] == 0  # marginal gains tie at zero, first feature wins
    assert t.depth == 2
    assert np.array_equal(t.malicious_fraction(t.apply(X, backend)), y)


def test_tree_max_depth_and_min_leaf(backend):
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 3))
    y = (rng.random(200) < 0.5).astype(np.uint8)
    t = grow_tree(X, y, max_depth=3, min_leaf=5, backend=backend)
    assert t.depth <= 3
    leaves = t.feature < 0
    assert t.counts[leaves].sum(axis=1).min() >= 5


def test_tree_missing_routing_and_root_fallback(backend):
    X = np.array([[1.0], [2.0], [3.0], [10.0], [np.nan]])
    y = np.array([0, 0, 0, 1, 0], dtype=np.uint8)
    t = grow_tree(X, y, backend=backend)
    # 3 non-missing rows go left, so the missing row follows them
    assert t.missing_left[0] == 1 and t.missing_routed >= 1
    assert t.apply(np.array([[np.nan]]), backend)[0] == 0


def test_decision_tree_all_missing_root_majority():
    m = matrix_from([[1.0], [2.0], [3.0], [10.0]], [0, 0, 1, 1])
    model = train_decision_tree(m)
    v = FeatureVector("q", None, None, None, None, None, None, None)
    label, score = predict(model, v)
    assert score == 0.5 and label is Label.MALICIOUS
    m2 = matrix_from([[1.0], [2.0], [3.0], [10.0]], [0, 0, 0, 1])
    label, score = predict(train_decision_tree(m2), v)
    assert label is Label.BENIGN and score == 0.25


# -- forest ----------------------------------------------------------------------


def test_degenerate_forest_equals_tree(small_matrix, backend):
    dt = train_decision_tree(small_matrix, backend=backend)
    rf = train_random_forest(
        small_matrix, TrainParams(tree_count=1, features_per_split=7, bootstrap=False), backend=backend
    )
    assert rf.parameters["trees"][0]["feature"] == dt.parameters["tree"]["feature"]
    a, _ = predict_matrix(dt, small_matrix)
    b, _ = predict_matrix(rf, small_matrix)
    assert np.array_equal(a, b)


def test_forest_deterministic_across_workers(small_matrix):
    p = TrainParams(tree_count=12, seed=5)
    one = train_random_forest(small_matrix, p, workers=1)
    four = train_random_forest(small_matrix, p, workers=4)
    assert one.dumps() == four.dumps()
    assert train_random_forest(small_matrix, TrainParams(tree_count=12, seed=6)).dumps() != one.dumps()


def test_forest_oob_on_synthetic(easy_matrix):
    model = train_random_forest(easy_matrix, TrainParams(tree_count=60), workers=4)
    assert model.parameters["oob_accuracy"] >= 0.90


def forest_with_votes(n_mal, n_total):
    leaf = {"feature": [-1], "threshold": [None], "left": [-1], "right": [-1], "missing_left": [False]}
    trees = [dict(leaf, counts=[[0, 1] if i < n_mal else [1, 0]]) for i in range(n_total)]
    return Model("random_forest", ("x",), {"trees": trees}, 0, (0.5, 0.5))


def test_vote_fraction():
    s = predict_scores(forest_with_votes(73, 100), np.array([[1.0]]))
    assert s[0] == pytest.approx(0.73)
    assert predict_scores(forest_with_votes(50, 100), np.array([[1.0]]))[0] == 0.5


def test_training_errors():
    with pytest.raises(TrainingError):
        train_naive_bayes(matrix_from([[1.0], [2.0]], [1, 1]))
    with pytest.raises(ValueError):
        TrainParams(tree_count=0)
    with pytest.raises(ValueError):
        train("svm", matrix_from([[1.0], [2.0]], [0, 1]))


# -- model files ---------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["naive_bayes", "decision_tree", "random_forest"])
def test_save_load_roundtrip(tmp_path, small_matrix, kind):
    model = train(kind, small_matrix, TrainParams(tree_count=10))
    path = tmp_path / "m.json"
    save_model(model, path)
    again = load_model(path)
    assert again == model
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(100, 7)) * 100
    assert np.array_equal(predict_scores(model, Z), predict_scores(again, Z))


def test_same_seed_same_file(small_matrix):
    a = train("random_forest", small_matrix, TrainParams(tree_count=5, seed=9))
    b = train("random_forest", small_matrix, TrainParams(tree_count=5, seed=9))
    assert a.dumps() == b.dumps()


def test_corrupt_and_version(tmp_path, small_matrix):
    text = train("decision_tree", small_matrix).dumps()
    with pytest.raises(ModelFormatError, match="corrupt"):
        loads_model(text[: len(text) // 2])
    doc = json.loads(text)
    doc["format_version"] += 1
    with pytest.raises(ModelVersionError):
        loads_model(json.dumps(doc))
    doc = json.loads(text)
    doc["parameters"]["tree"]["left"][0] = 999
    with pytest.raises(ModelFormatError):
        loads_model(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="missing.json"):
        load_model(tmp_path / "missing.json")


def test_feature_mismatch(small_matrix):
    full = train("naive_bayes", small_matrix)
    nc = train("naive_bayes", small_matrix.project("non_click"))
    with pytest.raises(FeatureMismatchError):
        predict_matrix(full, small_matrix.project("non_click"))
    # a full-mode matrix carries everything a non_click model needs
    a, _ = predict_matrix(nc, small_matrix)
    b, _ = predict_matrix(nc, small_matrix.project("non_click"))
    assert np.array_equal(a, b)
    with pytest.raises(FeatureMismatchError):
        predict_scores(full, np.zeros((1, 3)))
    assert len(ALL_FEATURES) == 7
