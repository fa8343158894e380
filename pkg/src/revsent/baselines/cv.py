from __future__ import annotations

import statistics
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..evaluation import BaselineReport, accuracy
from .model import DISPLAY_NAMES, KINDS, train_baseline
from .tfidf import tfidf_fit_transform


class MissingClassWarning(UserWarning):
    pass


@dataclass
class CVResult:
    kind: str
    fold_accuracies: list[float]
    folds: list[np.ndarray]

    @property
    def mean(self) -> float:
        return statistics.fmean(self.fold_accuracies)


def kfold_indices(n: int, k: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Shuffled index folds whose sizes differ by at most one."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} items")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def kfold_cv(
    kind: str,
    documents: Sequence,
    labels: Sequence[int],
    k: int = 10,
    seed: int = 0,
    hyperparams: dict | None = None,
    n_classes: int = 3,
) -> CVResult:
    """k-fold cross-validation; TF-IDF and the model are refit inside every fold."""
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    if len(documents) != y.size:
        raise ValueError("documents and labels differ in length")
    folds = kfold_indices(y.size, k, seed)
    present = set(np.unique(y).tolist())
    accs = []
    for i, held in enumerate(folds):
        train_idx = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != i]))
        missing = present - set(np.unique(y[train_idx]).tolist())
        if missing:
            warnings.warn(f"fold {i}: class(es) {sorted(missing)} absent from training part", MissingClassWarning)
        space, X_train = tfidf_fit_transform([documents[j] for j in train_idx])
        model = train_baseline(kind, X_train, y[train_idx], hyperparams, feature_space=space, n_classes=n_classes)
        pred = model.predict(space.transform([documents[j] for j in held]))
        accs.append(accuracy(pred, y[held]))
    return CVResult(kind, accs, folds)


def run_baselines(
    train_docs: Sequence,
    train_labels: Sequence[int],
    test_docs: Sequence,
    test_labels: Sequence[int],
    kinds: Sequence[str] = KINDS,
    k: int = 10,
    seed: int = 0,
    labeling: str = "",
    hyperparams: dict[str, dict] | None = None,
) -> list[BaselineReport]:
    """One comparison row per classifier: training, k-fold and held-out test accuracy.

    Training accuracy refits on the whole training set and scores that same
    set, which is what exposes overfitting; the cross-validation column is the
    mean held-out fold accuracy on the training set.
    """
    hyperparams = hyperparams or {}
    y_train = np.asarray([int(v) for v in train_labels])
    y_test = np.asarray([int(v) for v in test_labels])
    space, X_train = tfidf_fit_transform(train_docs)
    X_test = space.transform(test_docs)
    rows = []
    for kind in kinds:
        hp = hyperparams.get(kind)
        model = train_baseline(kind, X_train, y_train, hp, feature_space=space)
        cv = kfold_cv(kind, train_docs, y_train, k=k, seed=seed, hyperparams=hp)
        rows.append(
            BaselineReport(
                model=DISPLAY_NAMES[kind],
                labeling=labeling,
                train_acc=accuracy(model.predict(X_train), y_train),
                cv_acc=cv.mean,
                test_acc=accuracy(model.predict(X_test), y_test),
            )
        )
    return rows
