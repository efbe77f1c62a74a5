"""Holdout and k-fold protocols, confusion-matrix metrics, info-gain ranking.

Malicious is the positive class throughout. Benign-class metrics are the
same formulas applied to the transposed matrix.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from shortspam.errors import EvaluationError
from shortspam.features import FeatureMatrix
from shortspam.learn.model import DEFAULT_SEED, Model
from shortspam.learn.predict import predict_matrix


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )

    def transposed(self) -> ConfusionMatrix:
        """The same counts seen with benign as the positive class."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)

    @classmethod
    def from_predictions(cls, y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionMatrix:
        t = np.asarray(y_true, dtype=bool)
        p = np.asarray(y_pred, dtype=bool)
        if t.shape != p.shape:
            raise ValueError("y_true and y_pred differ in length")
        return cls(
            tp=int(np.sum(t & p)),
            fp=int(np.sum(~t & p)),
            tn=int(np.sum(~t & ~p)),
            fn=int(np.sum(t & ~p)),
        )

    def to_dict(self) -> dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def f_measure(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * (precision * recall) / (precision + recall)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f_measure: float
    support: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "support": self.support,
        }


@dataclass
class EvalReport:
    confusion: ConfusionMatrix
    accuracy: float
    malicious: ClassMetrics
    benign: ClassMetrics
    weighted_f_measure: float
    # names of metrics whose denominator was zero (reported as 0)
    undefined: list[str] = field(default_factory=list)
    fold_reports: list[EvalReport] | None = None
    label: str = ""

    @property
    def mean_fold_accuracy(self) -> float | None:
        if not self.fold_reports:
            return None
        return sum(r.accuracy for r in self.fold_reports) / len(self.fold_reports)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "label": self.label,
            "confusion": self.confusion.to_dict(),
            "accuracy": self.accuracy,
            "malicious": self.malicious.to_dict(),
            "benign": self.benign.to_dict(),
            "weighted_f_measure": self.weighted_f_measure,
            "undefined": list(self.undefined),
        }
        if self.fold_reports is not None:
            d["mean_fold_accuracy"] = self.mean_fold_accuracy
            d["folds"] = [r.to_dict() for r in self.fold_reports]
        return d


def _ratio(num: int, den: int, name: str, undefined: list[str]) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def _class_metrics(c: ConfusionMatrix, cls: str, undefined: list[str]) -> ClassMetrics:
    p = _ratio(c.tp, c.tp + c.fp, f"precision_{cls}", undefined)
    r = _ratio(c.tp, c.tp + c.fn, f"recall_{cls}", undefined)
    if p + r == 0:
        undefined.append(f"f_measure_{cls}")
    return ClassMetrics(p, r, f_measure(p, r), c.tp + c.fn)


def metrics(c: ConfusionMatrix) -> EvalReport:
    undefined: list[str] = []
    mal = _class_metrics(c, "malicious", undefined)
    ben = _class_metrics(c.transposed(), "benign", undefined)
    acc = _ratio(c.tp + c.tn, c.total, "accuracy", undefined)
    if c.total:
        weighted = (mal.f_measure * mal.support + ben.f_measure * ben.support) / c.total
    else:
        weighted = 0.0
    return EvalReport(c, acc, mal, ben, weighted, undefined)


def evaluate(model: Model, m: FeatureMatrix, backend: str | None = None) -> EvalReport:
    y = m.labels()
    pred, _ = predict_matrix(model, m, backend=backend)
    report = metrics(ConfusionMatrix.from_predictions(y, pred))
    report.label = model.kind
    return report


# -- splitting --------------------------------------------------------------------


def _class_indices(m: FeatureMatrix) -> list[np.ndarray]:
    y = m.labels()
    # malicious first; the order fixes how the generator stream is consumed
    return [np.flatnonzero(y == 1), np.flatnonzero(y == 0)]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_holdout(
    m: FeatureMatrix, test_fraction: float = 0.25, seed: int = DEFAULT_SEED
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Stratified train/test split; rows keep their original relative order."""
    if not 0 < test_fraction < 1:
        raise EvaluationError("test_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for name, idx in zip(("malicious", "benign"), _class_indices(m)):
        if len(idx) < 2:
            raise EvaluationError(f"class {name} has {len(idx)} rows; at least 2 are needed")
        n_test = min(max(_round_half_up(len(idx) * test_fraction), 1), len(idx) - 1)
        perm = rng.permutation(idx)
        test_idx.append(perm[:n_test])
        train_idx.append(perm[n_test:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return m.subset(train.tolist()), m.subset(test.tolist())


def stratified_folds(m: FeatureMatrix, k: int = 10, seed: int = DEFAULT_SEED) -> list[np.ndarray]:
    """Row indices of each of ``k`` test folds.

    Each class is shuffled and dealt round-robin; the dealer continues from
    where the previous class stopped so total fold sizes also differ by ≤ 1.
    """
    if k < 2:
        raise EvaluationError("k must be at least 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for name, idx in zip(("malicious", "benign"), _class_indices(m)):
        if len(idx) < k:
            raise EvaluationError(f"class {name} has {len(idx)} rows; {k}-fold CV needs {k}")
        for i in rng.permutation(idx):
            folds[pos % k].append(int(i))
            pos += 1
    return [np.sort(np.asarray(f, dtype=np.intp)) for f in folds]


def cross_validate(
    trainer: Callable[[FeatureMatrix], Model],
    m: FeatureMatrix,
    k: int = 10,
    seed: int = DEFAULT_SEED,
    *,
    workers: int = 1,
    backend: str | None = None,
) -> EvalReport:
    """Stratified k-fold CV; the aggregate confusion is the sum over folds."""
    folds = stratified_folds(m, k, seed)
    n = len(m)

    def run(fold: np.ndarray) -> EvalReport:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        model = trainer(m.subset(np.flatnonzero(mask).tolist()))
        return evaluate(model, m.subset(fold.tolist()), backend=backend)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fold_reports = list(pool.map(run, folds))
    else:
        fold_reports = [run(f) for f in folds]
    total = ConfusionMatrix()
    for r in fold_reports:
        total = total + r.confusion
    report = metrics(total)
    report.fold_reports = fold_reports
    report.label = fold_reports[0].label if fold_reports else ""
    return report


# -- information gain -------------------------------------------------------------


def entropy(counts: Sequence[int]) -> float:
    """Shannon entropy in bits of a count vector."""
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def equal_width_bins(values: np.ndarray, bins: int) -> np.ndarray:
    """Bin ids 0..bins-1 over the observed range; missing values get id ``bins``."""
    out = np.full(values.shape[0], bins, dtype=np.intp)
    present = ~np.isnan(values)
    if not present.any():
        return out
    v = values[present]
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        out[present] = 0
        return out
    b = np.floor((v - lo) / (hi - lo) * bins).astype(np.intp)
    out[present] = np.clip(b, 0, bins - 1)
    return out


def info_gain(bin_ids: np.ndarray, y: np.ndarray) -> float:
    y = np.asarray(y, dtype=np.intp)
    n = len(y)
    if n == 0:
        return 0.0
    base = entropy(np.bincount(y, minlength=2).tolist())
    cond = 0.0
    for b in np.unique(bin_ids):
        sel = y[bin_ids == b]
        cond += len(sel) / n * entropy(np.bincount(sel, minlength=2).tolist())
    return max(0.0, base - cond)


@dataclass(frozen=True)
class FeatureRanking:
    entries: tuple[tuple[str, float], ...]

    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def to_dict(self) -> dict[str, Any]:
        return {"ranking": [{"rank": i + 1, "feature": n, "info_gain": g}
                            for i, (n, g) in enumerate(self.entries)]}


def info_gain_rank(m: FeatureMatrix, bins: int = 10) -> FeatureRanking:
    """Rank features by information gain about the label (equal-width bins)."""
    if bins < 2:
        raise EvaluationError("bins must be at least 2")
    X = m.to_numpy()
    y = m.labels()
    gains = [(info_gain(equal_width_bins(X[:, j], bins), y), j) for j in range(X.shape[1])]
    # ties within float noise fall back to column order
    gains.sort(key=lambda t: (-round(t[0], 12), t[1]))
    return FeatureRanking(tuple((m.feature_names[j], g) for g, j in gains))


# -- rendering ------------------------------------------------------------------------------


def _pct(x: float) -> str:
    return f"{100 * x:.2f}%"


def results_table(reports: dict[str, EvalReport]) -> str:
    """Side-by-side metric table, one column per classifier."""
    names = list(reports)
    rows = [
        ("Accuracy", lambda r: r.accuracy),
        ("Recall (malicious)", lambda r: r.malicious.recall),
        ("Recall (benign)", lambda r: r.benign.recall),
        ("Precision (malicious)", lambda r: r.malicious.precision),
        ("Precision (benign)", lambda r: r.benign.precision),
        ("F-measure (malicious)", lambda r: r.malicious.f_measure),
        ("F-measure (benign)", lambda r: r.benign.f_measure),
        ("Weighted F-measure", lambda r: r.weighted_f_measure),
    ]
    width = max(14, *(len(n) for n in names))
    lines = [f"{'Evaluation Metric':<24}" + "".join(f"{n:>{width + 2}}" for n in names)]
    lines.append("-" * len(lines[0]))
    for title, get in rows:
        lines.append(f"{title:<24}" + "".join(f"{_pct(get(reports[n])):>{width + 2}}" for n in names))
    return "\n".join(lines) + "\n"


def confusion_table(c: ConfusionMatrix) -> str:
    """Counts and row-normalised percentages, actual class by row."""
    def row(name: str, a: int, b: int) -> str:
        tot = a + b
        pa = _pct(a / tot) if tot else "n/a"
        pb = _pct(b / tot) if tot else "n/a"
        return f"{name:<18}{a:>10}{b:>10}    {pa:>8}{pb:>9}"

    corner = "actual/predicted"
    head = f"{corner:<18}{'malicious':>10}{'benign':>10}    {'malicious':>8}{'benign':>9}"
    return "\n".join([head, row("malicious", c.tp, c.fn), row("benign", c.fp, c.tn)]) + "\n"


def render_report(report: EvalReport, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    if fmt == "csv":
        lines = ["metric,value"]
        d = report.to_dict()
        lines.append(f"accuracy,{d['accuracy']!r}")
        for cls in ("malicious", "benign"):
            for k in ("precision", "recall", "f_measure", "support"):
                lines.append(f"{k}_{cls},{d[cls][k]!r}")
        lines.append(f"weighted_f_measure,{d['weighted_f_measure']!r}")
        for k, v in d["confusion"].items():
            lines.append(f"{k},{v}")
        return "\n".join(lines) + "\n"
    text = results_table({report.label or "model": report}) + "\n" + confusion_table(report.confusion)
    if report.fold_reports:
        text += f"\n{len(report.fold_reports)} folds, mean fold accuracy {_pct(report.mean_fold_accuracy)}\n"
    if report.undefined:
        text += "undefined (zero denominator, shown as 0): " + ", ".join(report.undefined) + "\n"
    return text


def render_ranking(r: FeatureRanking, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(r.to_dict(), indent=2) + "\n"
    if fmt == "csv":
        return "rank,feature,info_gain\n" + "".join(
            f"{i + 1},{n},{g!r}\n" for i, (n, g) in enumerate(r.entries)
        )
    lines = [f"{'Rank':<6}{'Feature':<30}{'Info gain (bits)':>18}"]
    lines += [f"{i + 1:<6}{n:<30}{g:>18.6f}" for i, (n, g) in enumerate(r.entries)]
    return "\n".join(lines) + "\n"
