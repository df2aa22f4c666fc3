"""Rooted taxonomy trees over species: Newick parsing, tree loss and paths."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

import numpy as np


class TreeError(ValueError):
    """Malformed tree text or a query about a label the tree does not hold."""


@dataclass(frozen=True)
class TaxonomyTree:
    """Tree stored as parent links; node 0 is not required to be the root.

    ``leaf_of_species`` maps each leaf name (a species code) to its node index.
    """

    parent: tuple
    names: tuple

    def __post_init__(self):
        n = len(self.parent)
        if n == 0 or len(self.names) != n:
            raise TreeError("tree must have at least one node and one name per node")
        roots = [i for i, q in enumerate(self.parent) if q < 0]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one root, found {len(roots)}")
        children = [[] for _ in range(n)]
        for i, q in enumerate(self.parent):
            if q >= 0:
                if q >= n:
                    raise TreeError(f"node {i} has out-of-range parent {q}")
                children[q].append(i)
        depth = [-1] * n
        depth[roots[0]] = 0
        stack = [roots[0]]
        order = []
        while stack:
            u = stack.pop()
            order.append(u)
            for v in children[u]:
                depth[v] = depth[u] + 1
                stack.append(v)
        if len(order) != n:
            raise TreeError("parent links contain a cycle or unreachable nodes")
        leaves = {}
        for i in range(n):
            if not children[i] and i != roots[0] or (n == 1):
                name = self.names[i]
                if not name:
                    raise TreeError(f"leaf node {i} has no name")
                if name in leaves:
                    raise TreeError(f"duplicate leaf {name!r}")
                leaves[name] = i
        object.__setattr__(self, "root", roots[0])
        object.__setattr__(self, "children", tuple(tuple(c) for c in children))
        object.__setattr__(self, "depth", tuple(depth))
        object.__setattr__(self, "leaf_of_species", leaves)

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def leaves(self) -> tuple:
        """Leaf names in left-to-right order."""
        out = []
        stack = [self.root]
        while stack:
            u = stack.pop()
            if not self.children[u]:
                out.append(self.names[u])
            stack.extend(reversed(self.children[u]))
        return tuple(out)

    def internal_nodes(self) -> list:
        """Internal nodes in pre-order (root first)."""
        out = []
        stack = [self.root]
        while stack:
            u = stack.pop()
            if self.children[u]:
                out.append(u)
                stack.extend(reversed(self.children[u]))
        return out

    def leaf(self, code) -> int:
        try:
            return self.leaf_of_species[code]
        except KeyError:
            raise TreeError(f"unknown species {code!r}") from None

    def lca(self, a: int, b: int) -> int:
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return a

    def to_newick(self) -> str:
        def emit(u):
            name = _quote(self.names[u])
            if not self.children[u]:
                return name
            return "(" + ",".join(emit(v) for v in self.children[u]) + ")" + name

        return emit(self.root) + ";"

    def to_dict(self) -> dict:
        """Parent links and names, keeping node indices (Newick text does not)."""
        return {"parent": list(self.parent), "names": list(self.names), "sha256": self.digest()}

    @classmethod
    def from_dict(cls, d) -> "TaxonomyTree":
        t = cls(tuple(int(q) for q in d["parent"]), tuple(d["names"]))
        if t.digest() != d["sha256"]:
            raise TreeError("stored tree does not match its recorded hash")
        return t

    def digest(self) -> str:
        """SHA-256 of the canonical Newick serialization."""
        return hashlib.sha256(self.to_newick().encode("utf-8")).hexdigest()


def _quote(name):
    if any(c in name for c in "(),:;[]' \t\n"):
        return "'" + name.replace("'", "''") + "'"
    return name


def _tokenize(text):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "[":
            j = text.find("]", i)
            if j < 0:
                raise TreeError("unterminated [comment]")
            i = j + 1
        elif c in "(),;:":
            yield c
            i += 1
        elif c == "'":
            buf = []
            i += 1
            while True:
                if i >= n:
                    raise TreeError("unterminated quoted label")
                if text[i] == "'":
                    if i + 1 < n and text[i + 1] == "'":
                        buf.append("'")
                        i += 2
                        continue
                    i += 1
                    break
                buf.append(text[i])
                i += 1
            yield ("label", "".join(buf))
        else:
            j = i
            while j < n and text[j] not in "(),;:[" and not text[j].isspace() and text[j] != "'":
                j += 1
            yield ("label", text[i:j])
            i = j


def parse_tree(text: str) -> TaxonomyTree:
    """Parse Newick text into a :class:`TaxonomyTree`.

    Internal node names are optional, branch lengths are read and discarded,
    ``[...]`` comments are skipped and the trailing semicolon is optional.
    """
    tokens = list(_tokenize(text))
    parent, names = [], []
    stack = []
    current = None  # node whose label/length may still follow
    pos = 0

    def new_node(par):
        parent.append(par)
        names.append("")
        return len(parent) - 1

    expect_node = True
    root = None
    while pos < len(tokens):
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if not expect_node:
                raise TreeError("unexpected '('")
            par = stack[-1] if stack else -1
            if par < 0 and root is not None:
                raise TreeError("text contains more than one tree")
            u = new_node(par)
            if par < 0:
                root = u
            stack.append(u)
            expect_node = True
            current = None
        elif tok == ",":
            if not stack:
                raise TreeError("',' outside parentheses")
            if expect_node:
                u = new_node(stack[-1])  # empty leaf, rejected later for lacking a name
            expect_node = True
            current = None
        elif tok == ")":
            if not stack:
                raise TreeError("unbalanced parentheses: extra ')'")
            if expect_node:
                new_node(stack[-1])
            current = stack.pop()
            expect_node = False
        elif tok == ";":
            if stack:
                raise TreeError("unbalanced parentheses: missing ')'")
            if pos != len(tokens):
                raise TreeError("content after ';'")
            break
        elif tok == ":":
            if pos >= len(tokens) or not isinstance(tokens[pos], tuple):
                raise TreeError("':' without branch length")
            try:
                float(tokens[pos][1])
            except ValueError:
                raise TreeError(f"bad branch length {tokens[pos][1]!r}") from None
            pos += 1
        else:
            label = tok[1]
            if expect_node:
                par = stack[-1] if stack else -1
                if par < 0 and root is not None:
                    raise TreeError("text contains more than one tree")
                u = new_node(par)
                if par < 0:
                    root = u
                names[u] = label
                current = u
                expect_node = False
            elif current is not None and not names[current]:
                names[current] = label
            else:
                raise TreeError(f"unexpected label {label!r}")
    if stack:
        raise TreeError("unbalanced parentheses: missing ')'")
    if root is None:
        raise TreeError("empty tree")
    return TaxonomyTree(parent=tuple(parent), names=tuple(names))


def load_tree(path) -> TaxonomyTree:
    with open(path, encoding="utf-8") as fh:
        return parse_tree(fh.read())


def micromass_tree_text() -> str:
    return resources.files("taxosvm.data").joinpath("micromass_tree.nwk").read_text("utf-8")


def micromass_tree() -> TaxonomyTree:
    """The shipped 20-species MicroMass taxonomy (uniform leaf depth 6)."""
    return parse_tree(micromass_tree_text())


def path_to_root(t: TaxonomyTree, code) -> list:
    """Node indices from the leaf of ``code`` up to and including the root."""
    u = t.leaf(code)
    out = [u]
    while t.parent[u] >= 0:
        u = t.parent[u]
        out.append(u)
    return out


def tree_distance(t: TaxonomyTree, a, b) -> int:
    """Edge count of the leaf-to-leaf path between species ``a`` and ``b``."""
    u, v = t.leaf(a), t.leaf(b)
    return t.depth[u] + t.depth[v] - 2 * t.depth[t.lca(u, v)]


def loss_matrix(t: TaxonomyTree, species_codes=None) -> np.ndarray:
    """``K x K`` integer matrix of tree distances.

    Rows and columns follow ``species_codes`` when given, else the tree's leaf order.
    """
    codes = t.leaves if species_codes is None else tuple(species_codes)
    K = len(codes)
    delta = np.zeros((K, K), dtype=np.int64)
    for i in range(K):
        for j in range(i + 1, K):
            delta[i, j] = delta[j, i] = tree_distance(t, codes[i], codes[j])
    return delta


def zero_one_loss(K: int) -> np.ndarray:
    return 1 - np.eye(K, dtype=np.int64)


def star_tree(codes) -> TaxonomyTree:
    """Root with every species as a direct child."""
    codes = tuple(codes)
    return TaxonomyTree(parent=(-1,) + (0,) * len(codes), names=("root",) + codes)


SEVERITY_CATEGORIES = ("correct", "within_genus", "within_gram", "distinct_gram")


@dataclass(frozen=True)
class SeverityScale:
    """Tree-loss thresholds of the error categories (MicroMass: genus 2, Gram 12)."""

    genus: int = 2
    gram: int = 12

    def categorize(self, delta: int) -> str:
        delta = int(delta)
        if delta < 0 or delta > self.gram or delta % 2:
            raise ValueError(f"tree loss {delta} is not representable on this taxonomy")
        if delta == 0:
            return "correct"
        if delta <= self.genus:
            return "within_genus"
        if delta < self.gram:
            return "within_gram"
        return "distinct_gram"


MICROMASS_SEVERITY = SeverityScale()


def severity_category(delta: int, scale: SeverityScale = MICROMASS_SEVERITY) -> str:
    return scale.categorize(delta)
