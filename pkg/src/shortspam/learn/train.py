"""Training entry points for the three classifiers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable

import numpy as np

from shortspam.errors import TrainingError
from shortspam.features import FeatureMatrix
from shortspam.learn.model import Model, TrainParams, params_to_dict
from shortspam.learn.tree import TreeArrays, grow_tree

VAR_FLOOR = 1e-9


def _check_classes(y: np.ndarray) -> tuple[float, float]:
    n1 = int(y.sum())
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        missing = "malicious" if n1 == 0 else "benign"
        raise TrainingError(f"training data has no {missing} rows")
    return n1 / len(y), n0 / len(y)


def _arrays(m: FeatureMatrix) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    return m.to_numpy(), m.labels(), tuple(m.feature_names)


# -- naive Bayes -------------------------------------------------------------------


def fit_naive_bayes(
    X: np.ndarray, y: np.ndarray, feature_names: tuple[str, ...], seed: int = 0
) -> Model:
    """Per-class Gaussian per feature over the non-missing values."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.uint8)
    prior = _check_classes(y)
    classes: dict[str, Any] = {}
    skipped = 0
    for label, code, p in (("malicious", 1, prior[0]), ("benign", 0, prior[1])):
        rows = X[y == code]
        stats = {}
        for j, name in enumerate(feature_names):
            vals = rows[:, j]
            vals = vals[~np.isnan(vals)]
            skipped += rows.shape[0] - vals.shape[0]
            if vals.size:
                stats[name] = {
                    "mean": float(vals.mean()),
                    "var": float(max(vals.var(), VAR_FLOOR)),
                    "count": int(vals.size),
                }
            else:
                stats[name] = {"mean": 0.0, "var": 1.0, "count": 0}
        classes[label] = {"prior": p, "stats": stats}
    return Model(
        kind="naive_bayes",
        feature_names=tuple(feature_names),
        parameters={"classes": classes, "var_floor": VAR_FLOOR, "missing_skipped": skipped},
        train_seed=seed,
        class_prior=prior,
        train_params={},
    )


def train_naive_bayes(m: FeatureMatrix, params: TrainParams | None = None) -> Model:
    X, y, names = _arrays(m)
    seed = params.seed if params else 0
    return fit_naive_bayes(X, y, names, seed)


# -- decision tree ---------------------------------------------------------------


def train_decision_tree(
    m: FeatureMatrix, params: TrainParams | None = None, *, backend: str | None = None
) -> Model:
    params = params or TrainParams()
    X, y, names = _arrays(m)
    prior = _check_classes(y)
    tree = grow_tree(X, y, max_depth=params.max_depth, min_leaf=params.min_leaf, backend=backend)
    return Model(
        kind="decision_tree",
        feature_names=names,
        parameters={"tree": tree.to_dict()},
        train_seed=params.seed,
        class_prior=prior,
        train_params=params_to_dict(params),
    )


# -- random forest --------------------------------------------------------------------


def tree_seed(seed: int, tree_index: int) -> int:
    """64-bit seed for one tree, hashed from the master seed and tree index."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, tree_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def train_random_forest(
    m: FeatureMatrix,
    params: TrainParams | None = None,
    *,
    workers: int = 1,
    backend: str | None = None,
) -> Model:
    """Bagged trees with per-node feature subsampling.

    Every tree draws from its own generator seeded by ``tree_seed``, so the
    forest is identical for any ``workers`` value.
    """
    params = params or TrainParams()
    X, y, names = _arrays(m)
    prior = _check_classes(y)
    n, n_features = X.shape
    k = params.resolved_features_per_split(n_features)

    def build(t: int) -> tuple[TreeArrays, int, np.ndarray]:
        s = tree_seed(params.seed, t)
        rng = np.random.default_rng(s)
        if params.bootstrap:
            sample = rng.integers(0, n, size=n)
        else:
            sample = np.arange(n)
        tree = grow_tree(
            X[sample],
            y[sample],
            max_depth=params.max_depth,
            min_leaf=params.min_leaf,
            features_per_split=k,
            rng=rng,
            backend=backend,
        )
        return tree, s, sample

    results = _map(build, range(params.tree_count), workers)

    oob_votes = np.zeros(n, dtype=np.int64)
    oob_total = np.zeros(n, dtype=np.int64)
    trees = []
    for tree, s, sample in results:
        d = tree.to_dict()
        d["seed"] = s
        trees.append(d)
        if params.bootstrap:
            oob = np.ones(n, dtype=bool)
            oob[sample] = False
            if oob.any():
                leaves = tree.apply(X[oob], backend=backend)
                frac = tree.malicious_fraction(leaves)
                oob_votes[oob] += frac >= 0.5
                oob_total[oob] += 1
    scored = oob_total > 0
    oob_accuracy = None
    if params.bootstrap and scored.any():
        pred = 2 * oob_votes[scored] >= oob_total[scored]
        oob_accuracy = float(np.mean(pred == y[scored].astype(bool)))

    return Model(
        kind="random_forest",
        feature_names=names,
        parameters={
            "trees": trees,
            "features_per_split": k,
            "bootstrap": params.bootstrap,
            "oob_accuracy": oob_accuracy,
        },
        train_seed=params.seed,
        class_prior=prior,
        train_params=params_to_dict(params),
    )


def _map(fn: Callable, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


TRAINERS = {
    "naive_bayes": train_naive_bayes,
    "decision_tree": train_decision_tree,
    "random_forest": train_random_forest,
}


def train(
    kind: str,
    m: FeatureMatrix,
    params: TrainParams | None = None,
    *,
    workers: int = 1,
    backend: str | None = None,
) -> Model:
    if kind == "naive_bayes":
        return train_naive_bayes(m, params)
    if kind == "decision_tree":
        return train_decision_tree(m, params, backend=backend)
    if kind == "random_forest":
        return train_random_forest(m, params, workers=workers, backend=backend)
    raise ValueError(f"unknown classifier kind {kind!r}")


def make_trainer(
    kind: str, params: TrainParams | None = None, *, workers: int = 1, backend: str | None = None
) -> Callable[[FeatureMatrix], Model]:
    """Bind ``kind`` and ``params`` into a one-argument trainer for cross-validation."""
    if kind not in TRAINERS:
        raise ValueError(f"unknown classifier kind {kind!r}")

    def trainer(m: FeatureMatrix) -> Model:
        return train(kind, m, params, workers=workers, backend=backend)

    trainer.__name__ = f"train_{kind}"
    return trainer
