"""Trained-model container, training parameters, and the JSON model file."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from shortspam.errors import ModelFormatError, ModelVersionError

FORMAT_NAME = "shortspam-model"
FORMAT_VERSION = 1
DEFAULT_SEED = 42

KINDS = ("naive_bayes", "decision_tree", "random_forest")


@dataclass(frozen=True)
class TrainParams:
    tree_count: int = 100
    max_depth: int | None = None  # None = unlimited
    min_leaf: int = 1
    features_per_split: int | None = None  # None = ceil(sqrt(n_features))
    seed: int = DEFAULT_SEED
    bootstrap: bool = True

    def __post_init__(self) -> None:
        if self.tree_count < 1:
            raise ValueError("tree_count must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")

    def resolved_features_per_split(self, n_features: int) -> int:
        k = self.features_per_split or math.ceil(math.sqrt(n_features))
        return max(1, min(k, n_features))


@dataclass(frozen=True, eq=False)
class Model:
    kind: str
    feature_names: tuple[str, ...]
    parameters: dict[str, Any]
    train_seed: int
    # (P(malicious), P(benign)) in the training data
    class_prior: tuple[float, float]
    train_params: dict[str, Any] = field(default_factory=dict)

    def to_document(self) -> dict[str, Any]:
        return {
            "format": FORMAT_NAME,
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "train_seed": self.train_seed,
            "class_prior": {"malicious": self.class_prior[0], "benign": self.class_prior[1]},
            "train_params": self.train_params,
            "parameters": self.parameters,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=1, allow_nan=False) + "\n"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Model) and self.dumps() == other.dumps()

    __hash__ = None  # type: ignore[assignment]


def params_to_dict(p: TrainParams) -> dict[str, Any]:
    return asdict(p)


def model_from_document(doc: Any) -> Model:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a shortspam model file")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"model format version {version!r} is not supported (expected {FORMAT_VERSION})"
        )
    try:
        kind = doc["kind"]
        if kind not in KINDS:
            raise ModelFormatError(f"unknown model kind {kind!r}")
        prior = doc["class_prior"]
        return Model(
            kind=kind,
            feature_names=tuple(doc["feature_names"]),
            parameters=doc["parameters"],
            train_seed=int(doc["train_seed"]),
            class_prior=(float(prior["malicious"]), float(prior["benign"])),
            train_params=dict(doc.get("train_params", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model file is missing or has invalid fields: {exc}") from None


def loads_model(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt model file: {exc.msg} at char {exc.pos}") from None
    model = model_from_document(doc)
    # validate structure eagerly so a damaged file fails at load, not at predict
    from shortspam.learn.predict import compile_model

    try:
        compile_model(model)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"model parameters are malformed: {exc}") from None
    return model


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(model.dumps(), encoding="utf-8")


def load_model(path: str | Path) -> Model:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc.strerror or exc}") from None
    return loads_model(text)
