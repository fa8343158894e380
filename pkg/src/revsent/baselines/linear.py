"""Naive Bayes, cosine kNN and a one-vs-rest linear SVM on TF-IDF rows."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .tree import as_csr


def _check_width(X, n_features: int):
    if X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")


class MultinomialNB:
    """Multinomial naive Bayes with additive (Laplace) smoothing.

    Feature values act as fractional term counts, so TF-IDF rows plug in
    directly.
    """

    kind = "nb"

    def __init__(self, alpha: float = 1.0, n_classes: int = 3):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = alpha
        self.n_classes = n_classes

    def fit(self, X, y) -> "MultinomialNB":
        X = as_csr(X)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        self.n_features = d
        onehot = sp.csr_matrix((np.ones(n), (np.arange(n), y)), shape=(n, self.n_classes))
        feature_count = np.asarray((onehot.T @ X).todense())
        class_count = np.bincount(y, minlength=self.n_classes).astype(np.float64)
        with np.errstate(divide="ignore"):
            self.class_log_prior = np.log(class_count / n)
        smoothed = feature_count + self.alpha
        self.feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
        return self

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = as_csr(X)
        _check_width(X, self.n_features)
        return np.asarray(X @ self.feature_log_prob.T) + self.class_log_prior

    def predict_log_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return jll - logsumexp(jll, axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.joint_log_likelihood(X), axis=1)

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "class_log_prior": [float(v) if np.isfinite(v) else None for v in self.class_log_prior],
            "feature_log_prob": self.feature_log_prob.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, **hyper) -> "MultinomialNB":
        nb = cls(**hyper)
        nb.n_features = int(d["n_features"])
        nb.class_log_prior = np.array([-np.inf if v is None else v for v in d["class_log_prior"]])
        nb.feature_log_prob = np.asarray(d["feature_log_prob"], dtype=np.float64).reshape(nb.n_classes, nb.n_features)
        return nb


def _l2_rows(X: sp.csr_matrix) -> sp.csr_matrix:
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sp.csr_matrix(sp.diags(scale) @ X)


class KNearestNeighbors:
    """k-NN under cosine distance with a plain majority vote.

    Equal distances resolve to the earlier stored row; tied votes to the
    lowest class index.
    """

    kind = "knn"

    def __init__(self, k: int = 5, n_classes: int = 3, chunk_size: int = 256):
        if k < 1:
            raise ValueError("k must be at least 1")
        self.k = k
        self.n_classes = n_classes
        self.chunk_size = chunk_size

    def fit(self, X, y) -> "KNearestNeighbors":
        self.X = as_csr(X)
        self.y = np.asarray(y, dtype=np.int64)
        self.n_features = self.X.shape[1]
        self._unit = _l2_rows(self.X)
        return self

    def kneighbors(self, X) -> np.ndarray:
        Q = _l2_rows(as_csr(X))
        _check_width(Q, self.n_features)
        k = min(self.k, self._unit.shape[0])
        out = np.empty((Q.shape[0], k), dtype=np.int64)
        for start in range(0, Q.shape[0], self.chunk_size):
            sims = (Q[start : start + self.chunk_size] @ self._unit.T).toarray()
            dist = 1.0 - sims
            out[start : start + self.chunk_size] = np.argsort(dist, axis=1, kind="stable")[:, :k]
        return out

    def predict(self, X) -> np.ndarray:
        nbrs = self.kneighbors(X)
        votes = np.zeros((nbrs.shape[0], self.n_classes), dtype=np.int64)
        for j in range(nbrs.shape[1]):
            votes[np.arange(nbrs.shape[0]), self.y[nbrs[:, j]]] += 1
        return np.argmax(votes, axis=1)

    def to_dict(self) -> dict:
        X = self.X
        return {
            "shape": list(X.shape),
            "data": X.data.tolist(),
            "indices": X.indices.tolist(),
            "indptr": X.indptr.tolist(),
            "labels": self.y.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, **hyper) -> "KNearestNeighbors":
        X = sp.csr_matrix(
            (np.asarray(d["data"], dtype=np.float64), np.asarray(d["indices"]), np.asarray(d["indptr"])),
            shape=tuple(d["shape"]),
        )
        return cls(**hyper).fit(X, np.asarray(d["labels"], dtype=np.int64))


class LinearSVM:
    """One-vs-rest linear SVM trained by stochastic subgradient descent on the
    L2-regularised hinge loss.

    Each class c gets a score w_c . x + b_c; the bias is not regularised.
    The weight vector is kept as ``scale * W`` so the per-step shrinkage from
    the L2 term costs O(1) instead of O(d).
    """

    kind = "svm"

    def __init__(self, epochs: int = 10, lr: float = 0.01, l2: float = 1e-4, seed: int = 0, n_classes: int = 3):
        self.epochs = epochs
        self.lr = lr
        self.l2 = l2
        self.seed = seed
        self.n_classes = n_classes

    def fit(self, X, y) -> "LinearSVM":
        X = as_csr(X)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        C = self.n_classes
        self.n_features = d
        W = np.zeros((C, d))
        scale = np.ones(C)
        b = np.zeros(C)
        shrink = 1.0 - self.lr * self.l2
        classes = np.arange(C)
        rng = np.random.default_rng(self.seed)
        indptr, indices, data = X.indptr, X.indices, X.data
        for _ in range(self.epochs):
            for i in rng.permutation(n):
                idx = indices[indptr[i] : indptr[i + 1]]
                vals = data[indptr[i] : indptr[i + 1]]
                target = np.where(classes == y[i], 1.0, -1.0)
                scores = scale * (W[:, idx] @ vals) + b
                active = target * scores < 1.0
                scale *= shrink
                if active.any():
                    rows = classes[active]
                    step = (self.lr * target[rows] / scale[rows])[:, np.newaxis]
                    W[np.ix_(rows, idx)] += step * vals[np.newaxis, :]
                    b[rows] += self.lr * target[rows]
            if scale.min() < 1e-8:
                W *= scale[:, np.newaxis]
                scale[:] = 1.0
        self.coef = W * scale[:, np.newaxis]
        self.intercept = b
        return self

    def decision_function(self, X) -> np.ndarray:
        X = as_csr(X)
        _check_width(X, self.n_features)
        return np.asarray(X @ self.coef.T) + self.intercept

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)

    def to_dict(self) -> dict:
        return {"n_features": self.n_features, "coef": self.coef.tolist(), "intercept": self.intercept.tolist()}

    @classmethod
    def from_dict(cls, d: dict, **hyper) -> "LinearSVM":
        svm = cls(**hyper)
        svm.n_features = int(d["n_features"])
        svm.coef = np.asarray(d["coef"], dtype=np.float64).reshape(svm.n_classes, svm.n_features)
        svm.intercept = np.asarray(d["intercept"], dtype=np.float64)
        return svm
