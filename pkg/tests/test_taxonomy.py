from collections import deque
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taxosvm.synthetic import micromass_counts
from taxosvm.taxonomy import (
    MICROMASS_SEVERITY,
    TaxonomyTree,
    TreeError,
    loss_matrix,
    micromass_tree,
    parse_tree,
    path_to_root,
    severity_category,
    star_tree,
    tree_distance,
)


def bfs_distance(t, a, b):
    """Independent oracle: breadth-first search over the undirected tree."""
    adj = {u: set(t.children[u]) for u in range(t.n_nodes)}
    for u, q in enumerate(t.parent):
        if q >= 0:
            adj[u].add(q)
    src, dst = t.leaf(a), t.leaf(b)
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist[dst]


@st.composite
def random_trees(draw):
    n_internal = draw(st.integers(1, 8))
    parent = [-1]
    for i in range(1, n_internal):
        parent.append(draw(st.integers(0, i - 1)))
    # every internal node gets at least one leaf so internal nodes stay internal
    leaf_parents = list(range(n_internal)) + draw(
        st.lists(st.integers(0, n_internal - 1), min_size=1, max_size=10))
    names = [f"n{i}" for i in range(n_internal)]
    for k, q in enumerate(leaf_parents):
        parent.append(q)
        names.append(f"L{k}")
    return TaxonomyTree(tuple(parent), tuple(names))


def test_example_distances():
    t = parse_tree("((A,B)g,(C)h)r;")
    assert tree_distance(t, "A", "A") == 0
    assert tree_distance(t, "A", "B") == 2
    assert tree_distance(t, "A", "C") == 4
    assert [t.names[u] for u in path_to_root(t, "A")] == ["A", "g", "r"]
    with pytest.raises(TreeError):
        tree_distance(t, "A", "Z")


@settings(max_examples=200, deadline=None)
@given(random_trees())
def test_metric_axioms_against_bfs(t):
    codes = t.leaves
    D = loss_matrix(t)
    assert D.shape == (len(codes), len(codes))
    assert np.all(np.diag(D) == 0)
    assert np.array_equal(D, D.T)
    for i, a in enumerate(codes):
        for j, b in enumerate(codes):
            assert D[i, j] == bfs_distance(t, a, b)
            if i != j:
                assert D[i, j] > 0
    # D[i, k] <= D[i, j] + D[j, k] for every triple
    assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :])


@settings(max_examples=100, deadline=None)
@given(random_trees())
def test_newick_round_trip(t):
    back = parse_tree(t.to_newick())
    assert back.leaves == t.leaves
    assert np.array_equal(loss_matrix(back), loss_matrix(t))
    assert back.digest() == t.digest()


def test_micromass_asset_shape():
    t = micromass_tree()
    codes = t.leaves
    assert len(codes) == 20
    assert set(codes) == set(micromass_counts())
    assert {t.depth[t.leaf(c)] for c in codes} == {6}
    assert t.n_nodes == 48
    for c in codes:
        assert len(path_to_root(t, c)) == 7
    D = loss_matrix(t)
    off = D[~np.eye(20, dtype=bool)]
    assert off.min() == 2 and off.max() == 12
    assert set(np.unique(off)) <= {2, 4, 6, 8, 10, 12}


def test_micromass_table_counts():
    counts = micromass_counts()
    assert sum(s for s, _ in counts.values()) == 213
    assert sum(n for _, n in counts.values()) == 571


@pytest.mark.parametrize("a, b, delta", [
    ("BAC.CEU", "BAC.THU", 2),
    ("STR.MIT", "STR.ORA", 2),
    ("ENT.ASB", "ENT.CLC", 2),
    ("CIT.BRA", "CIT.FRE", 2),
    ("ESH.COL", "SHG.SON", 2),
    ("SHG.BOY", "SHG.FLX", 2),
    ("ESH.COL", "CIT.FRE", 4),
    ("ESH.COL", "YER.ETC", 6),
    ("ESH.COL", "HAE.INF", 10),
    ("BAC.CEU", "LIS.MNC", 6),
    ("BAC.CEU", "CLO.DIF", 10),
    ("BAC.CEU", "ESH.COL", 12),
])
def test_micromass_distances(a, b, delta):
    t = micromass_tree()
    assert tree_distance(t, a, b) == delta
    assert tree_distance(t, b, a) == delta


def test_severity_categories():
    assert severity_category(0) == "correct"
    assert severity_category(2) == "within_genus"
    assert severity_category(4) == "within_gram"
    assert severity_category(10) == "within_gram"
    assert severity_category(12) == "distinct_gram"
    for bad in (3, 14, -2):
        with pytest.raises(ValueError):
            MICROMASS_SEVERITY.categorize(bad)


@pytest.mark.parametrize("text", [
    "((A,B)g,(C)h",          # unbalanced
    "((A,A)g,C)r;",          # duplicate leaf
    "((A,)g,C)r;",           # unnamed leaf
    "(A,B)r;(C)s;",          # trailing garbage
])
def test_parse_errors(text):
    with pytest.raises(TreeError):
        parse_tree(text)


def test_parse_comments_lengths_quotes():
    t = parse_tree("[header] (('Genus one':1.5,B:2)g:0.1,C)r")
    assert t.leaves == ("Genus one", "B", "C")
    assert tree_distance(t, "Genus one", "C") == 3


def test_star_tree_loss():
    t = star_tree(["a", "b", "c"])
    D = loss_matrix(t)
    assert np.array_equal(D, 2 * (1 - np.eye(3, dtype=int)))


def test_loss_matrix_follows_code_order():
    t = parse_tree("((A,B)g,(C)h)r;")
    D = loss_matrix(t, ["C", "A", "B"])
    assert D.tolist() == [[0, 4, 4], [4, 0, 2], [4, 2, 0]]


def test_lca_pairs():
    t = micromass_tree()
    for a, b in combinations(t.leaves[:6], 2):
        u = t.lca(t.leaf(a), t.leaf(b))
        pa, pb = path_to_root(t, a), path_to_root(t, b)
        assert u == next(x for x in pa if x in set(pb))


def test_dict_round_trip_keeps_node_indices():
    t = TaxonomyTree(parent=(3, 3, 4, 4, -1), names=("A", "B", "C", "x", "r"))
    back = TaxonomyTree.from_dict(t.to_dict())
    assert back.parent == t.parent and back.names == t.names
    bad = t.to_dict()
    bad["names"] = ["B", "A", "C", "x", "r"]
    with pytest.raises(TreeError, match="hash"):
        TaxonomyTree.from_dict(bad)
