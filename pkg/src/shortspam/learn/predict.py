"""Prediction for all model kinds.

Scores are the probability of the malicious class: the posterior for naive
Bayes, the leaf's malicious fraction for a tree, and the fraction of trees
voting malicious for a forest. A score of exactly 0.5 is labeled malicious.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from shortspam.errors import FeatureMismatchError
from shortspam.features import FeatureMatrix, FeatureVector
from shortspam.learn.model import Model
from shortspam.learn.tree import TreeArrays
from shortspam.model import Label


@dataclass
class _Compiled:
    kind: str
    trees: list[TreeArrays] | None = None
    nb: dict | None = None


def _compile(model: Model) -> _Compiled:
    p = model.parameters
    if model.kind == "naive_bayes":
        for label in ("malicious", "benign"):
            stats = p["classes"][label]["stats"]
            for name in model.feature_names:
                s = stats[name]
                float(s["mean"]), float(s["var"]), int(s["count"])
        return _Compiled("naive_bayes", nb=p)
    if model.kind == "decision_tree":
        return _Compiled("decision_tree", trees=[TreeArrays.from_dict(p["tree"])])
    if model.kind == "random_forest":
        trees = [TreeArrays.from_dict(t) for t in p["trees"]]
        if not trees:
            raise ValueError("forest has no trees")
        return _Compiled("random_forest", trees=trees)
    raise ValueError(f"unknown model kind {model.kind!r}")


_cache: dict[int, tuple[Model, _Compiled]] = {}


def compile_model(model: Model) -> _Compiled:
    hit = _cache.get(id(model))
    if hit is not None and hit[0] is model:
        return hit[1]
    compiled = _compile(model)
    if len(_cache) > 64:
        _cache.clear()
    _cache[id(model)] = (model, compiled)
    return compiled


def _columns(model: Model, names: Sequence[str]) -> list[int]:
    pos = {n: i for i, n in enumerate(names)}
    missing = [n for n in model.feature_names if n not in pos]
    if missing:
        raise FeatureMismatchError(
            f"model expects features {list(model.feature_names)}; input lacks {missing}"
        )
    return [pos[n] for n in model.feature_names]


def _nb_scores(model: Model, nb: dict, X: np.ndarray) -> np.ndarray:
    classes = nb["classes"]
    d = np.full(X.shape[0], math.log(classes["malicious"]["prior"]) - math.log(classes["benign"]["prior"]))
    # per-feature log-likelihood ratios, summed in name order so column order
    # never changes the floating-point result
    for j, name in sorted(enumerate(model.feature_names), key=lambda t: t[1]):
        sm = classes["malicious"]["stats"][name]
        sb = classes["benign"]["stats"][name]
        if sm["count"] == 0 or sb["count"] == 0:
            continue
        x = X[:, j]
        present = ~np.isnan(x)
        xv = np.where(present, x, 0.0)
        ll = [
            -0.5 * math.log(2 * math.pi * s["var"]) - (xv - s["mean"]) ** 2 / (2 * s["var"])
            for s in (sm, sb)
        ]
        d += np.where(present, ll[0] - ll[1], 0.0)
    with np.errstate(over="ignore"):
        pos = 1.0 / (1.0 + np.exp(-np.abs(d)))
    return np.where(d >= 0, pos, 1.0 - pos)


def predict_scores(model: Model, X: np.ndarray, names: Sequence[str] | None = None,
                   backend: str | None = None) -> np.ndarray:
    """Malicious-class scores for the rows of ``X``.

    ``names`` labels the columns of ``X``; by default they must already be
    the model's features, in order.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if names is not None:
        X = X[:, _columns(model, names)]
    elif X.shape[1] != len(model.feature_names):
        raise FeatureMismatchError(
            f"expected {len(model.feature_names)} columns, got {X.shape[1]}"
        )
    X = np.ascontiguousarray(X)
    c = compile_model(model)
    if c.kind == "naive_bayes":
        return _nb_scores(model, c.nb, X)
    if c.kind == "decision_tree":
        tree = c.trees[0]
        return tree.malicious_fraction(tree.apply(X, backend=backend))
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for tree in c.trees:
        votes += tree.malicious_fraction(tree.apply(X, backend=backend)) >= 0.5
    return votes / len(c.trees)


def labels_from_scores(scores: np.ndarray) -> np.ndarray:
    """1 (malicious) where score >= 0.5."""
    return (np.asarray(scores) >= 0.5).astype(np.uint8)


def predict_matrix(model: Model, m: FeatureMatrix, backend: str | None = None
                   ) -> tuple[np.ndarray, np.ndarray]:
    scores = predict_scores(model, m.to_numpy(), m.feature_names, backend=backend)
    return labels_from_scores(scores), scores


def predict(model: Model, v: FeatureVector) -> tuple[Label, float]:
    names = v.mode.feature_names
    X = np.array([[np.nan if x is None else x for x in v.values(names)]], dtype=np.float64)
    score = float(predict_scores(model, X, names)[0])
    return (Label.MALICIOUS if score >= 0.5 else Label.BENIGN), score
