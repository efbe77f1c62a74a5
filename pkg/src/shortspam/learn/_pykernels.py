"""Pure numpy versions of the compiled kernels.

Same inputs, same outputs, same floating-point operation order as
``_ckernels.pyx``. Used when the extension is unavailable or when
``SHORTSPAM_PURE_PYTHON=1``.
"""

from __future__ import annotations

import numpy as np

TIE_EPS = 1e-12


def _ent(xlogx: np.ndarray, a, b):
    return xlogx[a + b] - xlogx[a] - xlogx[b]


def best_split(X, y, features, xlogx, min_leaf):
    n = X.shape[0]
    if n < 2 or len(features) == 0:
        return -1, float("nan"), 0.0, False
    y = np.asarray(y, dtype=np.intp)
    n1 = int(y.sum())
    n0 = n - n1
    P = _ent(xlogx, n0, n1)

    gains, thrs, feats, mls = [], [], [], []
    for f in features:
        col = X[:, f]
        miss = np.isnan(col)
        m1 = int(y[miss].sum())
        m0 = int(miss.sum()) - m1
        vals = col[~miss]
        nn = vals.shape[0]
        if nn < 2:
            continue
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        lab = y[~miss][order]
        t1 = int(lab.sum())
        t0 = nn - t1

        boundary = v[:-1] < v[1:]
        nl = np.arange(1, nn, dtype=np.intp)
        cl1 = np.cumsum(lab)[:-1]
        cl0 = nl - cl1
        nr = nn - nl
        left_big = nl >= nr
        a0 = np.where(left_big, cl0 + m0, cl0)
        a1 = np.where(left_big, cl1 + m1, cl1)
        b0 = np.where(left_big, t0 - cl0, t0 - cl0 + m0)
        b1 = np.where(left_big, t1 - cl1, t1 - cl1 + m1)
        ok = boundary & (a0 + a1 >= min_leaf) & (b0 + b1 >= min_leaf)
        if not ok.any():
            continue
        a0, a1, b0, b1 = a0[ok], a1[ok], b0[ok], b1[ok]
        W = _ent(xlogx, a0, a1) + _ent(xlogx, b0, b1)
        gains.append((P - W) / n)
        lo, hi = v[:-1][ok], v[1:][ok]
        thr = 0.5 * (lo + hi)
        thrs.append(np.where(thr < hi, thr, lo))
        feats.append(np.full(W.shape[0], f, dtype=np.intp))
        mls.append(left_big[ok])

    if not gains:
        return -1, float("nan"), 0.0, False
    g = np.concatenate(gains)
    best = int(np.flatnonzero(g >= g.max() - TIE_EPS)[0])
    return (
        int(np.concatenate(feats)[best]),
        float(np.concatenate(thrs)[best]),
        float(g[best]),
        bool(np.concatenate(mls)[best]),
    )


def apply_tree(feature, threshold, left, right, missing_left, X):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.intp)
    active = feature[node] >= 0
    rows = np.arange(n)
    while active.any():
        r = rows[active]
        nd = node[r]
        x = X[r, feature[nd]]
        miss = np.isnan(x)
        go_left = np.where(miss, missing_left[nd].astype(bool), x <= threshold[nd])
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node
