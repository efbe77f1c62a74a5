import numpy as np

from shortspam.features import FeatureMatrix, FeatureVector, Mode
from shortspam.model import Label


def matrix_from(X, y, mode=Mode.FULL):
    """FeatureMatrix whose leading columns are ``X`` (NaN = missing).

    Columns beyond ``X`` get a constant value, so they never split.
    """
    X = np.asarray(X, dtype=np.float64)
    names = Mode(mode).feature_names
    rows = []
    for i, row in enumerate(X):
        vals = {}
        for j, name in enumerate(names):
            if j < X.shape[1]:
                vals[name] = None if np.isnan(row[j]) else float(row[j])
            else:
                vals[name] = 0.0
        rows.append(FeatureVector(global_hash=f"r{i}", mode=Mode(mode),
                                  label=Label.MALICIOUS if y[i] else Label.BENIGN, **vals))
    return FeatureMatrix(rows, Mode(mode))
