from shortspam.learn._backend import DEFAULT_BACKEND, NATIVE_AVAILABLE, available_backends
from shortspam.learn.model import (
    DEFAULT_SEED,
    FORMAT_VERSION,
    Model,
    TrainParams,
    load_model,
    loads_model,
    save_model,
)
from shortspam.learn.predict import labels_from_scores, predict, predict_matrix, predict_scores
from shortspam.learn.train import (
    fit_naive_bayes,
    make_trainer,
    train,
    train_decision_tree,
    train_naive_bayes,
    train_random_forest,
    tree_seed,
)
from shortspam.learn.tree import TreeArrays, grow_tree

__all__ = [
    "DEFAULT_BACKEND",
    "DEFAULT_SEED",
    "FORMAT_VERSION",
    "Model",
    "NATIVE_AVAILABLE",
    "TrainParams",
    "TreeArrays",
    "available_backends",
    "fit_naive_bayes",
    "grow_tree",
    "labels_from_scores",
    "load_model",
    "loads_model",
    "make_trainer",
    "predict",
    "predict_matrix",
    "predict_scores",
    "save_model",
    "train",
    "train_decision_tree",
    "train_naive_bayes",
    "train_random_forest",
    "tree_seed",
]
