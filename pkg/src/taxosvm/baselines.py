"""Reference classifiers: random forest, 1-nearest neighbour and nearest median centroid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from taxosvm import kernels


@dataclass(frozen=True)
class DecisionTree:
    """Array-encoded binary tree; ``feature[u] < 0`` marks a leaf voting ``leaf_class[u]``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_class: np.ndarray

    def apply(self, X) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            u = node[active]
            go_left = X[active, self.feature[u]] <= self.threshold[u]
            node[active] = np.where(go_left, self.left[u], self.right[u])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X) -> np.ndarray:
        return self.leaf_class[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_class": self.leaf_class.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "DecisionTree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["leaf_class"], dtype=np.int64),
        )


def grow_tree(X, order_t, y, n_classes, counts, mtry, rng, backend=None) -> DecisionTree:
    """Grow one unpruned Gini tree on the bootstrap multiplicities ``counts``.

    Nodes split until pure or down to a single bootstrap draw; a node whose
    ``mtry`` sampled features admit no impurity-reducing split becomes a leaf.
    """
    kern = kernels.get_backend(backend)
    N, p = X.shape
    feature, threshold, left, right, leaf_class = [], [], [], [], []

    def add():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_class.append(-1)
        return len(feature) - 1

    stack = [(add(), np.flatnonzero(counts > 0))]
    while stack:
        u, members = stack.pop()
        cw = np.bincount(y[members], weights=counts[members], minlength=n_classes)
        leaf_class[u] = int(np.argmax(cw))
        total = cw.sum()
        if np.count_nonzero(cw) <= 1 or total < 2:
            continue
        feats = rng.choice(p, size=mtry, replace=False).astype(np.int64)
        weight = np.zeros(N)
        weight[members] = counts[members]
        f, thr, _ = kern.best_split(X, order_t, y, weight, feats, n_classes, float((cw * cw).sum() / total))
        if f < 0:
            continue
        go_left = X[members, f] <= thr
        lu, ru = add(), add()
        feature[u], threshold[u], left[u], right[u] = f, thr, lu, ru
        stack.append((ru, members[~go_left]))
        stack.append((lu, members[go_left]))
    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(leaf_class, dtype=np.int64),
    )


def default_mtry(p: int) -> int:
    return max(1, math.isqrt(p))


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    n_classes: int
    p: int
    mtry: int
    seed: int
    oob_counts: np.ndarray | None = None

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def votes(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.p:
            raise ValueError(f"dimension mismatch: model has p={self.p}, input has {X.shape[1]}")
        V = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for t in self.trees:
            np.add.at(V, (rows, t.predict(X)), 1)
        return V

    def predict(self, X) -> np.ndarray:
        """Plurality vote; ties go to the lowest species id."""
        return np.argmax(self.votes(X), axis=1)

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "p": self.p,
            "mtry": self.mtry,
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "ForestModel":
        return cls(
            tuple(DecisionTree.from_dict(t) for t in d["trees"]),
            int(d["n_classes"]),
            int(d["p"]),
            int(d["mtry"]),
            int(d["seed"]),
        )


def train_rf(X, labels, n_classes, n_trees=500, mtry=None, seed=0, backend=None) -> ForestModel:
    """Breiman forest: bootstrap of size N per tree, ``mtry`` candidate features per node.

    Tree ``t`` draws from its own generator seeded with ``(seed, t)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    N, p = X.shape
    if N == 0:
        raise ValueError("training set is empty")
    mtry = default_mtry(p) if mtry is None else int(mtry)
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must lie in [1, {p}]")
    order_t = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
    trees = []
    oob = np.zeros(N, dtype=np.int64)
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        counts = np.bincount(rng.integers(0, N, size=N), minlength=N).astype(np.float64)
        oob += counts == 0
        trees.append(grow_tree(X, order_t, y, n_classes, counts, mtry, rng, backend))
    return ForestModel(tuple(trees), n_classes, p, mtry, seed, oob)


def predict_rf(m: ForestModel, x) -> int:
    return int(m.predict(x)[0])


@dataclass(frozen=True)
class NearestNeighborModel:
    """Stores the training spectra; predicts the label of the Euclidean-nearest one."""

    X: np.ndarray
    labels: np.ndarray

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def predict(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[1] != self.p:
            raise ValueError(f"dimension mismatch: model has p={self.p}, input has {Q.shape[1]}")
        # ties resolve to the lowest training index through argmin
        return np.array(
            [self.labels[np.argmin(((self.X - q) ** 2).sum(axis=1))] for q in Q], dtype=np.int64
        )

    def to_dict(self) -> dict:
        return {"X": self.X.tolist(), "labels": self.labels.tolist()}

    @classmethod
    def from_dict(cls, d) -> "NearestNeighborModel":
        return cls(np.asarray(d["X"], dtype=np.float64), np.asarray(d["labels"], dtype=np.int64))


def train_1nn(X, labels) -> NearestNeighborModel:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    return NearestNeighborModel(X.copy(), np.asarray(labels, dtype=np.int64).copy())


def predict_1nn(train_X, train_labels, x) -> int:
    return int(train_1nn(train_X, train_labels).predict(x)[0])


@dataclass(frozen=True)
class CentroidModel:
    """Per-species coordinate-wise median; a species without training spectra gets a NaN row."""

    centroids: np.ndarray

    @property
    def p(self) -> int:
        return self.centroids.shape[1]

    def predict(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[1] != self.p:
            raise ValueError(f"dimension mismatch: model has p={self.p}, input has {Q.shape[1]}")
        d = ((Q[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2)
        d = np.where(np.isnan(d), np.inf, d)
        return np.argmin(d, axis=1)

    def to_dict(self) -> dict:
        return {"centroids": [[None if np.isnan(v) else v for v in row] for row in self.centroids.tolist()]}

    @classmethod
    def from_dict(cls, d) -> "CentroidModel":
        return cls(np.array([[np.nan if v is None else v for v in row] for row in d["centroids"]], dtype=np.float64))


def train_centroid(X, labels, n_classes) -> CentroidModel:
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    C = np.full((n_classes, X.shape[1]), np.nan)
    for k in range(n_classes):
        rows = X[labels == k]
        if rows.shape[0]:
            C[k] = np.median(rows, axis=0)
    return CentroidModel(C)


def predict_centroid(m: CentroidModel, x) -> int:
    return int(m.predict(x)[0])
