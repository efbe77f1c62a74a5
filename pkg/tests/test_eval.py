import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import matrix_from
from shortspam import eval as ev
from shortspam.errors import EvaluationError
from shortspam.features import ALL_FEATURES
from shortspam.eval import ConfusionMatrix, f_measure, metrics
from shortspam.learn import Model, TrainParams, make_trainer


def test_f_measure_table_value():
    assert round(f_measure(0.812, 0.810), 4) == 0.8110


def test_symmetric_confusion():
    r = metrics(ConfusionMatrix(1, 1, 1, 1))
    assert r.accuracy == r.malicious.precision == r.malicious.recall == r.malicious.f_measure == 0.5
    assert r.benign.f_measure == 0.5 and r.weighted_f_measure == 0.5


def test_zero_denominators_reported():
    r = metrics(ConfusionMatrix(tp=0, fp=0, tn=5, fn=0))
    assert r.malicious.precision == 0.0 and "precision_malicious" in r.undefined
    assert r.accuracy == 1.0
    assert metrics(ConfusionMatrix()).undefined


@settings(max_examples=200)
@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
def test_metric_identities(tp, fp, tn, fn):
    c = ConfusionMatrix(tp, fp, tn, fn)
    r = metrics(c)
    if c.total:
        assert r.accuracy == pytest.approx((tp + tn) / c.total)
    if tp + fn:
        assert r.malicious.recall == pytest.approx(tp / (tp + fn))
    if tn + fp:
        assert r.benign.recall == pytest.approx(tn / (tn + fp))
    assert metrics(c.transposed()).malicious == r.benign
    assert 0 <= r.weighted_f_measure <= 1


def test_from_predictions():
    c = ConfusionMatrix.from_predictions([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert c == ConfusionMatrix(tp=2, fp=1, tn=1, fn=1)
    assert c + c == ConfusionMatrix(4, 2, 2, 2)


# -- splits ------------------------------------------------------------------


def labeled_matrix(n_mal, n_ben):
    y = [1] * n_mal + [0] * n_ben
    return matrix_from(np.arange(len(y), dtype=float)[:, None], y)


def test_holdout_paper_sizes():
    tr, te = ev.split_holdout(labeled_matrix(5926, 6074), 0.25, seed=1)
    y = te.labels()
    assert int(y.sum()) == 1482 and int((y == 0).sum()) == 1519
    assert len(tr) + len(te) == 12000


def test_holdout_small_exact():
    tr, te = ev.split_holdout(labeled_matrix(8, 8), 0.25)
    assert int(te.labels().sum()) == 2 and int((te.labels() == 0).sum()) == 2


def test_holdout_deterministic_and_disjoint():
    m = labeled_matrix(40, 33)
    a = ev.split_holdout(m, 0.3, seed=3)
    b = ev.split_holdout(m, 0.3, seed=3)
    assert [r.global_hash for r in a[1].rows] == [r.global_hash for r in b[1].rows]
    assert not {r.global_hash for r in a[0].rows} & {r.global_hash for r in a[1].rows}
    with pytest.raises(EvaluationError):
        ev.split_holdout(labeled_matrix(1, 5))


@settings(max_examples=60, deadline=None)
@given(st.integers(10, 60), st.integers(10, 60), st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_folds_partition(n_mal, n_ben, k, seed):
    m = labeled_matrix(n_mal, n_ben)
    folds = ev.stratified_folds(m, k, seed)
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(len(m)))
    y = m.labels()
    for cls in (0, 1):
        sizes = [int((y[f] == cls).sum()) for f in folds]
        assert max(sizes) - min(sizes) <= 1
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


def test_folds_100_rows():
    folds = ev.stratified_folds(labeled_matrix(50, 50), 10)
    assert all(len(f) == 10 for f in folds)
    assert [f.tolist() for f in folds] == [f.tolist() for f in ev.stratified_folds(labeled_matrix(50, 50), 10)]


def test_folds_need_k_rows_per_class():
    with pytest.raises(EvaluationError):
        ev.stratified_folds(labeled_matrix(3, 50), 4)


def perfect_data():
    y = [1, 0] * 20
    return matrix_from(np.array(y, dtype=float)[:, None], y)


def fixed_tree(mal_left):
    tree = {
        "feature": [0, -1, -1], "threshold": [0.5, None, None], "left": [1, -1, -1],
        "right": [2, -1, -1], "missing_left": [True, False, False],
        "counts": [[1, 1], [0, 1], [1, 0]] if mal_left else [[1, 1], [1, 0], [0, 1]],
    }
    return Model("decision_tree", ALL_FEATURES, {"tree": tree}, 0, (0.5, 0.5))


def test_cv_oracles():
    m = perfect_data()
    assert ev.cross_validate(lambda _m: fixed_tree(False), m).accuracy == 1.0
    assert ev.cross_validate(lambda _m: fixed_tree(True), m).accuracy == 0.0


def test_cv_confusion_is_fold_sum(small_matrix):
    r = ev.cross_validate(make_trainer("decision_tree"), small_matrix, k=5, seed=3)
    assert len(r.fold_reports) == 5
    total = ConfusionMatrix()
    for f in r.fold_reports:
        total = total + f.confusion
    assert total == r.confusion and r.confusion.total == len(small_matrix)


def test_cv_same_across_workers(small_matrix):
    tr = make_trainer("random_forest", TrainParams(tree_count=8))
    a = ev.cross_validate(tr, small_matrix, 5, 11, workers=1)
    b = ev.cross_validate(tr, small_matrix, 5, 11, workers=3)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


# -- information gain ---------------------------------------------------------------


def test_info_gain_hand_case():
    m = matrix_from([[0.0], [0.0], [1.0], [1.0]], [1, 1, 0, 0])
    r = ev.info_gain_rank(m, bins=2)
    assert r.entries[0] == ("domain_age_days", 1.0)


def test_perfect_predictor_ranks_first():
    rng = np.random.default_rng(4)
    y = (rng.random(300) < 0.3).astype(int)
    X = np.column_stack([rng.normal(size=300), y.astype(float), rng.normal(size=300)])
    r = ev.info_gain_rank(matrix_from(X, y))
    assert r.names()[0] == "creation_gap_days"
    assert r.entries[0][1] == pytest.approx(oracles.entropy(y.tolist()), abs=1e-12)


def test_independent_noise_low_gain():
    rng = np.random.default_rng(2024)
    y = rng.integers(0, 2, 1000)
    X = rng.uniform(size=(1000, 1))
    r = ev.info_gain_rank(matrix_from(X, y), bins=10)
    assert dict(r.entries)["domain_age_days"] < 0.02


def test_info_gain_missing_bin():
    values = np.array([0.0, 1.0, np.nan, np.nan])
    bins = ev.equal_width_bins(values, 10)
    assert bins.tolist() == [0, 9, 10, 10]
    assert ev.info_gain(bins, np.array([0, 0, 1, 1])) == pytest.approx(1.0)
    assert ev.entropy([5, 5]) == 1.0 and ev.entropy([]) == 0.0


def test_info_gain_errors():
    with pytest.raises(EvaluationError):
        ev.info_gain_rank(perfect_data(), bins=1)


# -- rendering -------------------------------------------------------------------------


def test_render_formats(small_matrix):
    r = ev.cross_validate(make_trainer("naive_bayes"), small_matrix, k=4)
    r.label = "Naive Bayes"
    text = ev.render_report(r, "text")
    for row in ("Accuracy", "Recall (malicious)", "Precision (benign)", "F-measure (malicious)",
                "Weighted F-measure", "Naive Bayes", "actual/predicted"):
        assert row in text
    d = json.loads(ev.render_report(r, "json"))
    assert d["accuracy"] == r.accuracy and len(d["folds"]) == 4
    csv_lines = ev.render_report(r, "csv").splitlines()
    assert csv_lines[0] == "metric,value" and csv_lines[1] == f"accuracy,{r.accuracy!r}"
    table = ev.results_table({"A": r, "B": r})
    assert "A" in table.splitlines()[0] and "B" in table.splitlines()[0]
    rank = ev.info_gain_rank(small_matrix)
    assert ev.render_ranking(rank, "csv").startswith("rank,feature,info_gain\n1,")
    assert json.loads(ev.render_ranking(rank, "json"))["ranking"][0]["rank"] == 1
    assert math.isfinite(rank.entries[0][1])
