"""Multiclass classifiers assembled from binary linear SVMs."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from taxosvm.linear import BinaryTrainConfig, LinearModel, train_binary
from taxosvm.taxonomy import TaxonomyTree


def _cfg(C, base: BinaryTrainConfig | None) -> BinaryTrainConfig:
    base = base or BinaryTrainConfig()
    return dataclasses.replace(base, C=C) if C is not None else base


@dataclass(frozen=True)
class OvaModel:
    """One class-vs-rest hyperplane per species; highest decision value wins."""

    models: tuple
    species_codes: tuple

    def __post_init__(self):
        if len(self.models) != len(self.species_codes):
            raise ValueError("need exactly one binary model per species")
        object.__setattr__(self, "_W", np.stack([m.weights for m in self.models]))
        object.__setattr__(self, "_b", np.array([m.bias for m in self.models]))

    @property
    def p(self) -> int:
        return self._W.shape[1]

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.p:
            raise ValueError(f"dimension mismatch: model has p={self.p}, input has {X.shape[1]}")
        return X @ self._W.T + self._b

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision(X), axis=1)

    def to_dict(self) -> dict:
        return {"species_codes": list(self.species_codes), "models": [m.to_dict() for m in self.models]}

    @classmethod
    def from_dict(cls, d) -> "OvaModel":
        return cls(tuple(LinearModel.from_dict(m) for m in d["models"]), tuple(d["species_codes"]))


def train_ova(X, labels, species_codes, C=None, cfg: BinaryTrainConfig | None = None, gram=None) -> OvaModel:
    """Species ``k`` against the rest for every ``k``; ``gram`` is an optional precomputed ``X X'``."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    cfg = _cfg(C, cfg)
    gram = X @ X.T if gram is None else gram
    models = tuple(
        train_binary(X, np.where(labels == k, 1.0, -1.0), cfg, gram) for k in range(len(species_codes))
    )
    return OvaModel(models, tuple(species_codes))


def predict_ova(m: OvaModel, x) -> int:
    return int(m.predict(x)[0])


@dataclass(frozen=True)
class OvoModel:
    """Pairwise hyperplanes; ``models[(i, j)]`` with ``i < j`` scores class ``i`` as +1."""

    models: dict
    species_codes: tuple

    def __post_init__(self):
        K = len(self.species_codes)
        if set(self.models) != {(i, j) for i in range(K) for j in range(i + 1, K)}:
            raise ValueError("need exactly one binary model per unordered class pair")

    @property
    def p(self) -> int:
        return next(iter(self.models.values())).p if self.models else 0

    def votes(self, X):
        """Per-class vote counts and summed winning margins, both ``(n, K)``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        n, K = X.shape[0], len(self.species_codes)
        votes = np.zeros((n, K), dtype=np.int64)
        strength = np.zeros((n, K))
        for (i, j), m in sorted(self.models.items()):
            f = m.decision(X)
            win_i = f >= 0.0
            votes[win_i, i] += 1
            votes[~win_i, j] += 1
            strength[win_i, i] += np.abs(f[win_i])
            strength[~win_i, j] += np.abs(f[~win_i])
        return votes, strength

    def predict(self, X) -> np.ndarray:
        """Most votes; ties go to the larger summed winning margin, then the lowest id."""
        votes, strength = self.votes(X)
        out = np.empty(votes.shape[0], dtype=np.int64)
        for r in range(votes.shape[0]):
            tied = np.flatnonzero(votes[r] == votes[r].max())
            out[r] = tied[np.argmax(strength[r, tied])]
        return out

    def to_dict(self) -> dict:
        return {
            "species_codes": list(self.species_codes),
            "models": [[i, j, m.to_dict()] for (i, j), m in sorted(self.models.items())],
        }

    @classmethod
    def from_dict(cls, d) -> "OvoModel":
        return cls({(i, j): LinearModel.from_dict(m) for i, j, m in d["models"]}, tuple(d["species_codes"]))


def train_ovo(X, labels, species_codes, C=None, cfg: BinaryTrainConfig | None = None, gram=None) -> OvoModel:
    """Each pair of species trained on that pair's spectra only."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    cfg = _cfg(C, cfg)
    gram = X @ X.T if gram is None else gram
    K = len(species_codes)
    models = {}
    for i in range(K):
        for j in range(i + 1, K):
            sel = (labels == i) | (labels == j)
            if not sel.any():
                models[(i, j)] = LinearModel(np.zeros(X.shape[1]), 1.0, degenerate=True)
                continue
            rows = np.flatnonzero(sel)
            models[(i, j)] = train_binary(
                X[rows], np.where(labels[rows] == i, 1.0, -1.0), cfg, gram[np.ix_(rows, rows)]
            )
    return OvoModel(models, tuple(species_codes))


def predict_ovo(m: OvoModel, x) -> int:
    return int(m.predict(x)[0])


@dataclass(frozen=True)
class NodeClassifier:
    """Child selector of one internal node.

    ``children`` lists the reachable children; a single child is a
    passthrough, two children share one binary model (+1 selects the first),
    more use one-vs-all over children.
    """

    children: tuple
    models: tuple = ()
    unreachable: tuple = ()

    def select(self, X) -> np.ndarray:
        """Index into ``children`` for every row of ``X``."""
        n = X.shape[0]
        if len(self.children) == 1:
            return np.zeros(n, dtype=np.int64)
        if len(self.children) == 2:
            return np.where(self.models[0].decision(X) >= 0.0, 0, 1)
        D = np.column_stack([m.decision(X) for m in self.models])
        return np.argmax(D, axis=1)

    def to_dict(self) -> dict:
        return {
            "children": list(self.children),
            "models": [m.to_dict() for m in self.models],
            "unreachable": list(self.unreachable),
        }

    @classmethod
    def from_dict(cls, d) -> "NodeClassifier":
        return cls(
            tuple(d["children"]),
            tuple(LinearModel.from_dict(m) for m in d["models"]),
            tuple(d["unreachable"]),
        )


@dataclass(frozen=True)
class CascadeModel:
    tree: TaxonomyTree
    species_codes: tuple
    nodes: dict = field(default_factory=dict)
    p: int = 0

    def decision_path(self, x) -> list:
        """Nodes visited from the root to the predicted leaf."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        u = self.tree.root
        path = [u]
        while u in self.nodes:
            node = self.nodes[u]
            u = node.children[int(node.select(x)[0])]
            path.append(u)
        return path

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.p:
            raise ValueError(f"dimension mismatch: model has p={self.p}, input has {X.shape[1]}")
        at = np.full(X.shape[0], self.tree.root)
        while True:
            moving = np.flatnonzero([u in self.nodes for u in at])
            if moving.size == 0:
                break
            for u in np.unique(at[moving]):
                rows = moving[at[moving] == u]
                node = self.nodes[int(u)]
                at[rows] = np.asarray(node.children)[node.select(X[rows])]
        code_id = {c: k for k, c in enumerate(self.species_codes)}
        return np.array([code_id[self.tree.names[u]] for u in at], dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "tree": self.tree.to_dict(),
            "species_codes": list(self.species_codes),
            "p": self.p,
            "nodes": [[u, self.nodes[u].to_dict()] for u in sorted(self.nodes)],
        }

    @classmethod
    def from_dict(cls, d) -> "CascadeModel":
        return cls(
            TaxonomyTree.from_dict(d["tree"]),
            tuple(d["species_codes"]),
            {int(u): NodeClassifier.from_dict(nd) for u, nd in d["nodes"]},
            int(d["p"]),
        )


def train_cascade(tree: TaxonomyTree, X, labels, species_codes, C=None,
                  cfg: BinaryTrainConfig | None = None, gram=None) -> CascadeModel:
    """Train a child selector at every internal node from the spectra below it.

    A child whose subtree holds no training spectra is recorded as
    unreachable and left out of that node's selector.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    cfg = _cfg(C, cfg)
    gram = X @ X.T if gram is None else gram
    species_codes = tuple(species_codes)
    missing = set(tree.leaves) - set(species_codes)
    if missing:
        raise ValueError(f"tree leaves without a species id: {sorted(missing)}")
    leaf_of = np.array([tree.leaf_of_species.get(c, -1) for c in species_codes])
    # ancestor chain of every sample, used to find which child subtree holds it
    sample_leaf = leaf_of[labels]
    if np.any(sample_leaf < 0):
        raise ValueError("training labels include species absent from the tree")
    child_towards = {}
    for leaf in set(sample_leaf.tolist()):
        v = leaf
        while tree.parent[v] >= 0:
            child_towards[(tree.parent[v], leaf)] = v
            v = tree.parent[v]

    nodes = {}
    for u in tree.internal_nodes():
        under = np.array([(u, leaf) in child_towards for leaf in sample_leaf.tolist()], dtype=bool)
        rows = np.flatnonzero(under)
        child_of_row = np.array([child_towards[(u, sample_leaf[r])] for r in rows], dtype=np.int64)
        present = set(child_of_row.tolist())
        reachable = tuple(c for c in tree.children[u] if c in present)
        unreachable = tuple(c for c in tree.children[u] if c not in present)
        if not reachable:
            continue  # whole subtree empty; never entered
        Xn, Kn = X[rows], gram[np.ix_(rows, rows)]
        if len(reachable) == 1:
            models = ()
        elif len(reachable) == 2:
            yb = np.where(child_of_row == reachable[0], 1.0, -1.0)
            models = (train_binary(Xn, yb, cfg, Kn),)
        else:
            models = tuple(
                train_binary(Xn, np.where(child_of_row == c, 1.0, -1.0), cfg, Kn) for c in reachable
            )
        nodes[u] = NodeClassifier(reachable, models, unreachable)
    return CascadeModel(tree, species_codes, nodes, X.shape[1])


def predict_cascade(m: CascadeModel, x) -> int:
    return int(m.predict(x)[0])


def species_prototypes(X, labels, K) -> np.ndarray:
    """Coordinate-wise median spectrum of each species (rows of ``X`` are assumed unit-normalized)."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    protos = np.empty((K, X.shape[1]))
    for k in range(K):
        rows = X[labels == k]
        if rows.shape[0] == 0:
            raise ValueError(f"species {k} has no spectra")
        protos[k] = np.median(rows, axis=0)
    return protos


def complete_linkage(P) -> list:
    """Agglomerate the rows of ``P`` under complete linkage and Euclidean distance.

    Returns the merges as ``(cluster_a, cluster_b, distance)`` with the
    scipy numbering convention (leaves ``0..K-1``, the ``t``-th merge creates
    cluster ``K + t``).  Among equal distances the lexicographically smallest
    pair of cluster ids merges first.
    """
    P = np.asarray(P, dtype=np.float64)
    K = P.shape[0]
    D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
    members = {k: [k] for k in range(K)}
    merges = []
    next_id = K
    while len(members) > 1:
        ids = sorted(members)
        best = None
        for ai, a in enumerate(ids):
            for b in ids[ai + 1:]:
                d = D[np.ix_(members[a], members[b])].max()
                if best is None or d < best[2]:
                    best = (a, b, d)
        a, b, d = best
        members[next_id] = members.pop(a) + members.pop(b)
        merges.append((a, b, float(d)))
        next_id += 1
    return merges


def build_dendrogram(X, labels, species_codes) -> TaxonomyTree:
    """Binary tree over species from complete-linkage clustering of median prototypes.

    Only species present in ``labels`` become leaves, in species-id order,
    so a training split missing a species yields a tree without it.
    """
    species_codes = tuple(species_codes)
    labels = np.asarray(labels)
    present = np.unique(labels)
    if present.size == 0:
        raise ValueError("no training spectra")
    K = present.size
    remap = np.searchsorted(present, labels)
    merges = complete_linkage(species_prototypes(X, remap, K)) if K > 1 else []
    parent = [-1] * (2 * K - 1)
    for t, (a, b, _) in enumerate(merges):
        parent[a] = parent[b] = K + t
    names = [species_codes[k] for k in present] + [f"merge{t}" for t in range(K - 1)]
    return TaxonomyTree(parent=tuple(parent), names=tuple(names))
