"""Greedy binary decision trees with entropy splits.

Rows with ``x <= threshold`` go left. A row whose split feature is missing
follows the child that received more non-missing training rows (left on a
tie); the split search scores candidates with missing rows already routed
that way. Nodes are numbered in creation order; node 0 is the root.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from shortspam.learn._backend import get_kernels, xlogx_table


@dataclass
class TreeArrays:
    feature: np.ndarray  # intp, -1 at leaves
    threshold: np.ndarray  # float64, NaN at leaves
    left: np.ndarray  # intp, -1 at leaves
    right: np.ndarray
    missing_left: np.ndarray  # uint8
    counts: np.ndarray  # (n_nodes, 2) int64: benign, malicious
    missing_routed: int = 0

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.intp)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray, backend: str | None = None) -> np.ndarray:
        """Leaf reached by each row. Rows with every feature missing stop at the root."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        leaves = get_kernels(backend).apply_tree(
            self.feature, self.threshold, self.left, self.right, self.missing_left, X
        )
        if X.shape[1]:
            leaves[np.isnan(X).all(axis=1)] = 0
        return leaves

    def malicious_fraction(self, nodes: np.ndarray) -> np.ndarray:
        c = self.counts[nodes]
        return c[:, 1] / c.sum(axis=1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": [None if np.isnan(t) else float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "missing_left": [bool(m) for m in self.missing_left],
            "counts": self.counts.tolist(),
            "missing_routed": self.missing_routed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TreeArrays:
        feature = np.asarray(d["feature"], dtype=np.intp)
        n = feature.shape[0]
        arrays = cls(
            feature=feature,
            threshold=np.array([np.nan if t is None else float(t) for t in d["threshold"]]),
            left=np.asarray(d["left"], dtype=np.intp),
            right=np.asarray(d["right"], dtype=np.intp),
            missing_left=np.asarray(d["missing_left"], dtype=np.uint8),
            counts=np.asarray(d["counts"], dtype=np.int64).reshape(n, 2),
            missing_routed=int(d.get("missing_routed", 0)),
        )
        for name in ("threshold", "left", "right", "missing_left"):
            if getattr(arrays, name).shape[0] != n:
                raise ValueError(f"tree array {name!r} has the wrong length")
        internal = feature >= 0
        kids = np.concatenate([arrays.left[internal], arrays.right[internal]])
        if n == 0 or (kids.size and (kids.min() <= 0 or kids.max() >= n)):
            raise ValueError("tree child pointers out of range")
        return arrays


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    max_depth: int | None = None,
    min_leaf: int = 1,
    features_per_split: int | None = None,
    rng: np.random.Generator | None = None,
    backend: str | None = None,
) -> TreeArrays:
    """Grow one tree on ``X`` (NaN = missing) and binary ``y`` (1 = malicious).

    With ``features_per_split`` smaller than the column count, each node
    draws that many candidate features from ``rng`` without replacement.
    Impure nodes split even at zero gain, so unlimited-depth trees fit any
    consistent training set exactly.
    """
    kernels = get_kernels(backend)
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    n, n_features = X.shape
    k = n_features if features_per_split is None else min(features_per_split, n_features)
    if k < n_features and rng is None:
        raise ValueError("feature subsampling needs an rng")
    all_features = np.arange(n_features, dtype=np.intp)
    table = xlogx_table(n)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    missing_left: list[int] = []
    counts: list[tuple[int, int]] = []
    missing_routed = 0

    def new_node(idx: np.ndarray) -> int:
        n1 = int(y[idx].sum())
        counts.append((len(idx) - n1, n1))
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        missing_left.append(0)
        return len(counts) - 1

    root = new_node(np.arange(n, dtype=np.intp))
    stack = [(root, np.arange(n, dtype=np.intp), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n0, n1 = counts[node]
        if n0 == 0 or n1 == 0 or len(idx) < 2 * min_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if k < n_features:
            feats = np.sort(rng.choice(n_features, size=k, replace=False)).astype(np.intp)
        else:
            feats = all_features
        Xn = X[idx]
        f, thr, _gain, ml = kernels.best_split(Xn, y[idx], feats, table, min_leaf)
        if f < 0:
            continue
        col = Xn[:, f]
        miss = np.isnan(col)
        go_left = (col <= thr) | (miss & ml)
        missing_routed += int(miss.sum())
        l_idx, r_idx = idx[go_left], idx[~go_left]
        feature[node], threshold[node], missing_left[node] = f, thr, int(ml)
        left[node] = new_node(l_idx)
        right[node] = new_node(r_idx)
        # right pushed first so the left subtree is expanded (and samples rng) first
        stack.append((right[node], r_idx, depth + 1))
        stack.append((left[node], l_idx, depth + 1))

    return TreeArrays(
        feature=np.asarray(feature, dtype=np.intp),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.intp),
        right=np.asarray(right, dtype=np.intp),
        missing_left=np.asarray(missing_left, dtype=np.uint8),
        counts=np.asarray(counts, dtype=np.int64).reshape(-1, 2),
        missing_routed=missing_routed,
    )
