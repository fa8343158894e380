"""Classical TF-IDF baselines: kNN, naive Bayes, linear SVM, CART and random forest."""

from .cv import CVResult, MissingClassWarning, kfold_cv, kfold_indices, run_baselines
from .linear import KNearestNeighbors, LinearSVM, MultinomialNB
from .model import (
    DEFAULT_HYPERPARAMS,
    KINDS,
    BaselineModel,
    load_baseline,
    predict_baseline,
    save_baseline,
    train_baseline,
)
from .tfidf import FeatureSpace, tfidf_fit, tfidf_fit_transform
from .tree import DecisionTree, RandomForest

__all__ = [
    "BaselineModel",
    "CVResult",
    "DEFAULT_HYPERPARAMS",
    "DecisionTree",
    "FeatureSpace",
    "KINDS",
    "KNearestNeighbors",
    "LinearSVM",
    "MissingClassWarning",
    "MultinomialNB",
    "RandomForest",
    "kfold_cv",
    "kfold_indices",
    "load_baseline",
    "predict_baseline",
    "run_baselines",
    "save_baseline",
    "tfidf_fit",
    "tfidf_fit_transform",
    "train_baseline",
]
