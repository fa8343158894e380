from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..labeling import Sentiment
from .linear import KNearestNeighbors, LinearSVM, MultinomialNB
from .tfidf import FeatureSpace
from .tree import DecisionTree, RandomForest, as_csr

MODEL_FORMAT = "revsent-baseline"
MODEL_VERSION = 1

ESTIMATORS = {
    "knn": KNearestNeighbors,
    "nb": MultinomialNB,
    "svm": LinearSVM,
    "tree": DecisionTree,
    "forest": RandomForest,
}
KINDS = tuple(ESTIMATORS)
DISPLAY_NAMES = {
    "knn": "kNN",
    "svm": "SVM",
    "nb": "Naive Bayes",
    "tree": "Decision Tree",
    "forest": "Random Forest",
}
DEFAULT_HYPERPARAMS = {
    "knn": {"k": 5},
    "nb": {"alpha": 1.0},
    "svm": {"epochs": 10, "lr": 0.01, "l2": 1e-4, "seed": 0},
    "tree": {"max_depth": 20, "min_samples_leaf": 2, "max_features": None, "seed": 0},
    "forest": {
        "n_trees": 50,
        "max_features": "sqrt",
        "bootstrap": True,
        "max_depth": 20,
        "min_samples_leaf": 2,
        "seed": 0,
    },
}


@dataclass
class BaselineModel:
    kind: str
    hyperparams: dict
    estimator: object
    n_features: int
    n_classes: int = 3
    feature_space: FeatureSpace | None = field(default=None, repr=False)

    def predict(self, X) -> np.ndarray:
        X = as_csr(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"{self.kind} model expects {self.n_features} features, got {X.shape[1]}")
        return self.estimator.predict(X)

    def predict_documents(self, documents) -> np.ndarray:
        if self.feature_space is None:
            raise ValueError("model was trained without a FeatureSpace")
        return self.predict(self.feature_space.transform(documents))


def resolve_hyperparams(kind: str, hyperparams: dict | None = None) -> dict:
    if kind not in ESTIMATORS:
        raise ValueError(f"unknown baseline kind {kind!r}; expected one of {', '.join(KINDS)}")
    merged = dict(DEFAULT_HYPERPARAMS[kind])
    for key, value in (hyperparams or {}).items():
        if key not in merged:
            raise ValueError(f"unknown hyperparameter {key!r} for {kind}")
        merged[key] = value
    return merged


def train_baseline(
    kind: str,
    features,
    labels,
    hyperparams: dict | None = None,
    *,
    feature_space: FeatureSpace | None = None,
    n_classes: int = 3,
) -> BaselineModel:
    """Fit one of the five classical classifiers on feature rows."""
    params = resolve_hyperparams(kind, hyperparams)
    X = as_csr(features)
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} feature rows but {y.size} labels")
    if np.unique(y).size < 2:
        raise ValueError("training labels contain a single class")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in 0..{n_classes - 1}")
    est = ESTIMATORS[kind](**params, n_classes=n_classes).fit(X, y)
    return BaselineModel(kind, params, est, X.shape[1], n_classes, feature_space)


def predict_baseline(model: BaselineModel, x) -> Sentiment:
    """Class of a single feature vector."""
    X = as_csr(x)
    if X.shape[0] != 1:
        raise ValueError("predict_baseline takes one vector; use BaselineModel.predict for batches")
    return Sentiment(int(model.predict(X)[0]))


def save_baseline(model: BaselineModel, path: str | Path) -> None:
    """Write a JSON document whose leading keys identify format and version."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "hyperparams": model.hyperparams,
        "n_features": model.n_features,
        "n_classes": model.n_classes,
        "feature_space": None if model.feature_space is None else model.feature_space.to_dict(),
        "params": model.estimator.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False)


def load_baseline(path: str | Path) -> BaselineModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a baseline model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')!r}")
    kind = doc["kind"]
    params = resolve_hyperparams(kind, doc["hyperparams"])
    est = ESTIMATORS[kind].from_dict(doc["params"], **params, n_classes=doc["n_classes"])
    fs = doc.get("feature_space")
    return BaselineModel(
        kind, params, est, int(doc["n_features"]), int(doc["n_classes"]), None if fs is None else FeatureSpace.from_dict(fs)
    )
