from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp


def _tokens(doc) -> list[str]:
    return doc.split() if isinstance(doc, str) else list(doc)


@dataclass
class FeatureSpace:
    """TF-IDF vocabulary fitted on a training corpus.

    idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1; rows are raw term counts
    times idf, then L2-normalised. Unknown terms are dropped at transform time.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray
    n_docs: int

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)

    def transform(self, documents: Sequence) -> sp.csr_matrix:
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for doc in documents:
            counts = Counter(t for t in _tokens(doc) if t in self.vocabulary)
            cols = sorted(self.vocabulary[t] for t in counts)
            inv = {self.vocabulary[t]: c for t, c in counts.items()}
            indices.extend(cols)
            data.extend(float(inv[c]) for c in cols)
            indptr.append(len(indices))
        X = sp.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
            shape=(len(documents), self.n_features),
        )
        X = X.multiply(self.idf[np.newaxis, :]).tocsr()
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
        scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
        return sp.csr_matrix(sp.diags(scale) @ X)

    def to_dict(self) -> dict:
        terms = sorted(self.vocabulary, key=self.vocabulary.__getitem__)
        return {"terms": terms, "idf": self.idf.tolist(), "n_docs": self.n_docs}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpace":
        return cls({t: i for i, t in enumerate(d["terms"])}, np.asarray(d["idf"], dtype=np.float64), int(d["n_docs"]))


def tfidf_fit(documents: Sequence) -> FeatureSpace:
    if len(documents) == 0:
        raise ValueError("cannot fit TF-IDF on zero documents")
    df: Counter = Counter()
    for doc in documents:
        df.update(set(_tokens(doc)))
    if not df:
        raise ValueError("every document is empty; no terms to index")
    terms = sorted(df)
    n = len(documents)
    idf = np.array([np.log((1.0 + n) / (1.0 + df[t])) + 1.0 for t in terms])
    return FeatureSpace({t: i for i, t in enumerate(terms)}, idf, n)


def tfidf_fit_transform(documents: Sequence) -> tuple[FeatureSpace, sp.csr_matrix]:
    space = tfidf_fit(documents)
    return space, space.transform(documents)
