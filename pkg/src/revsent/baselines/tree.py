"""CART classification trees (Gini) and bagged random forests over sparse features."""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp


def as_csr(X) -> sp.csr_matrix:
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    return sp.csr_matrix(X)


def _resolve_max_features(max_features, d: int) -> int:
    if max_features is None or max_features == "all":
        return d
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    if isinstance(max_features, float):
        return max(1, min(d, int(max_features * d)))
    return max(1, min(d, int(max_features)))


def _best_split(Xn: sp.csc_matrix, y: np.ndarray, n_classes: int, min_leaf: int):
    """Best Gini split of one node over all columns of ``Xn``.

    Works on the nonzero entries only: the implicit zeros of each column are
    folded into a single item carrying their class counts, so the cost is
    O(nnz log nnz). Returns (column, threshold, score) or None. Ties go to the
    lowest column, then the lowest threshold.
    """
    m, nf = Xn.shape
    total = np.bincount(y, minlength=n_classes).astype(np.float64)
    nnz = np.diff(Xn.indptr)
    ent_feat = np.repeat(np.arange(nf), nnz)
    ent_val = Xn.data
    ent_cls = y[Xn.indices]

    nz_counts = np.zeros((nf, n_classes))
    np.add.at(nz_counts, (ent_feat, ent_cls), 1.0)
    n_zero = m - nnz
    zf = np.flatnonzero(n_zero > 0)

    values = np.concatenate([ent_val, np.zeros(zf.size)])
    feats = np.concatenate([ent_feat, zf])
    counts = np.zeros((values.size, n_classes))
    counts[np.arange(ent_val.size), ent_cls] = 1.0
    counts[ent_val.size :] = total[np.newaxis, :] - nz_counts[zf]

    order = np.lexsort((values, feats))
    values, feats, counts = values[order], feats[order], counts[order]
    if values.size < 2:
        return None
    cum = np.cumsum(counts, axis=0)
    starts = np.flatnonzero(np.r_[True, feats[1:] != feats[:-1]])
    before = np.zeros((nf, n_classes))
    present = feats[starts]
    before[present[1:]] = cum[starts[1:] - 1]
    left = cum - before[feats]

    cand = np.flatnonzero((feats[:-1] == feats[1:]) & (values[1:] > values[:-1]))
    if cand.size == 0:
        return None
    left = left[cand]
    right = total[np.newaxis, :] - left
    n_left = left.sum(axis=1)
    n_right = m - n_left
    ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    if not ok.any():
        return None
    cand, left, right, n_left, n_right = cand[ok], left[ok], right[ok], n_left[ok], n_right[ok]
    # maximising sum(c^2)/n on both sides minimises weighted Gini impurity
    score = (left**2).sum(axis=1) / n_left + (right**2).sum(axis=1) / n_right
    j = int(np.argmax(score))
    i = cand[j]
    lo, hi = values[i], values[i + 1]
    thr = (lo + hi) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(feats[i]), float(thr), float(score[j])


class DecisionTree:
    """CART classifier; samples with ``x[feature] <= threshold`` go left."""

    kind = "tree"

    def __init__(self, max_depth: int = 20, min_samples_leaf: int = 2, max_features=None, seed: int = 0, n_classes: int = 3):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed
        self.n_classes = n_classes

    def fit(self, X, y, rng: np.random.Generator | None = None) -> "DecisionTree":
        X = as_csr(X)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        self.n_features = d
        mf = _resolve_max_features(self.max_features, d)
        if mf < d and rng is None:
            rng = np.random.default_rng(self.seed)

        feature, threshold, left, right, counts = [], [], [], [], []

        def new_node(rows):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            counts.append(np.bincount(y[rows], minlength=self.n_classes))
            return len(feature) - 1

        root = new_node(np.arange(n))
        stack = [(root, np.arange(n), 0)]
        while stack:
            node, rows, depth = stack.pop()
            ys = y[rows]
            if depth >= self.max_depth or rows.size < 2 * self.min_samples_leaf or np.all(ys == ys[0]):
                continue
            Xn = X[rows]
            if mf >= d:
                found = _best_split(Xn.tocsc(), ys, self.n_classes, self.min_samples_leaf)
            else:
                found = None
                perm = rng.permutation(d)
                # keep drawing feature batches until one yields a usable split
                for start in range(0, d, mf):
                    cols = np.sort(perm[start : start + mf])
                    hit = _best_split(Xn[:, cols].tocsc(), ys, self.n_classes, self.min_samples_leaf)
                    if hit is not None:
                        found = (int(cols[hit[0]]), hit[1], hit[2])
                        break
            if found is None:
                continue
            f, thr, _ = found
            col = Xn[:, f].toarray().ravel()
            go_left = col <= thr
            feature[node], threshold[node] = f, thr
            l_node = new_node(rows[go_left])
            r_node = new_node(rows[~go_left])
            left[node], right[node] = l_node, r_node
            # right pushed first so the left subtree is numbered first
            stack.append((r_node, rows[~go_left], depth + 1))
            stack.append((l_node, rows[go_left], depth + 1))

        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        return self

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = as_csr(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            f = self.feature[node[active]]
            vals = np.asarray(X[active, f]).ravel()
            go_left = vals <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.counts[self.apply(X)], axis=1)

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, **hyper) -> "DecisionTree":
        tree = cls(**hyper)
        tree.n_features = int(d["n_features"])
        tree.feature = np.asarray(d["feature"], dtype=np.int64)
        tree.threshold = np.asarray(d["threshold"], dtype=np.float64)
        tree.left = np.asarray(d["left"], dtype=np.int64)
        tree.right = np.asarray(d["right"], dtype=np.int64)
        tree.counts = np.asarray(d["counts"], dtype=np.int64).reshape(-1, tree.n_classes)
        return tree


class RandomForest:
    """Bagged CART trees with per-node feature subsampling and hard voting."""

    kind = "forest"

    def __init__(
        self,
        n_trees: int = 50,
        max_features="sqrt",
        bootstrap: bool = True,
        max_depth: int = 20,
        min_samples_leaf: int = 2,
        seed: int = 0,
        n_classes: int = 3,
    ):
        self.n_trees = n_trees
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed
        self.n_classes = n_classes

    def _tree_hyper(self, tree_seed: int) -> dict:
        return dict(
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            max_features=self.max_features,
            seed=tree_seed,
            n_classes=self.n_classes,
        )

    def bootstrap_rows(self, tree_seed: int, n: int) -> np.ndarray:
        if not self.bootstrap:
            return np.arange(n)
        return np.random.default_rng([tree_seed, 0]).integers(0, n, size=n)

    def fit(self, X, y) -> "RandomForest":
        X = as_csr(X)
        y = np.asarray(y, dtype=np.int64)
        n = X.shape[0]
        self.n_features = X.shape[1]
        self.tree_seeds = [int(s) for s in np.random.SeedSequence(self.seed).generate_state(self.n_trees)]
        self.trees = []
        for ts in self.tree_seeds:
            rows = self.bootstrap_rows(ts, n)
            tree = DecisionTree(**self._tree_hyper(ts))
            tree.fit(X[rows], y[rows], rng=np.random.default_rng([ts, 1]))
            self.trees.append(tree)
        return self

    def tree_predictions(self, X) -> np.ndarray:
        X = as_csr(X)
        return np.stack([t.predict(X) for t in self.trees])

    def predict(self, X) -> np.ndarray:
        votes = self.tree_predictions(X)
        tally = np.zeros((votes.shape[1], self.n_classes), dtype=np.int64)
        for row in votes:
            tally[np.arange(votes.shape[1]), row] += 1
        return np.argmax(tally, axis=1)

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "tree_seeds": self.tree_seeds,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict, **hyper) -> "RandomForest":
        forest = cls(**hyper)
        forest.n_features = int(d["n_features"])
        forest.tree_seeds = [int(s) for s in d["tree_seeds"]]
        forest.trees = [
            DecisionTree.from_dict(td, **forest._tree_hyper(ts)) for td, ts in zip(d["trees"], forest.tree_seeds)
        ]
        return forest
