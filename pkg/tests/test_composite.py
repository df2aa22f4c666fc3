import numpy as np
import pytest

from taxosvm.composite import (
    CascadeModel,
    OvaModel,
    OvoModel,
    build_dendrogram,
    complete_linkage,
    predict_cascade,
    species_prototypes,
    train_cascade,
    train_ova,
    train_ovo,
)
from taxosvm.linear import BinaryTrainConfig, LinearModel, train_binary
from taxosvm.taxonomy import loss_matrix, parse_tree, star_tree

from conftest import blobs

CFG = BinaryTrainConfig(C=10.0)


def test_ova_two_classes_matches_binary(rng):
    d = blobs(rng, K=2)
    m = train_ova(d.X, d.labels, d.species_codes, cfg=CFG)
    b = train_binary(d.X, np.where(d.labels == 0, 1.0, -1.0), CFG)
    np.testing.assert_array_equal(m.models[0].weights, b.weights)
    assert np.array_equal(m.predict(d.X), d.labels)


def test_ova_and_ovo_fit_separable_blobs(rng):
    d = blobs(rng, K=4, n_per=6)
    for train in (train_ova, train_ovo):
        m = train(d.X, d.labels, d.species_codes, cfg=CFG)
        assert np.array_equal(m.predict(d.X), d.labels)


def _fixed(w, b):
    return LinearModel(np.asarray(w, float), float(b))


def test_ovo_three_cycle_tie_break():
    # 0 beats 1, 1 beats 2, 2 beats 0: every class has one vote
    x = np.array([[1.0]])
    models = {(0, 1): _fixed([1.0], 0.0), (1, 2): _fixed([2.0], 0.0), (0, 2): _fixed([-3.0], 0.0)}
    m = OvoModel(models, ("a", "b", "c"))
    votes, strength = m.votes(x)
    assert votes.tolist() == [[1, 1, 1]]
    assert strength.tolist() == [[1.0, 2.0, 3.0]]
    assert m.predict(x).tolist() == [2]


def test_ovo_full_tie_goes_to_lowest_id():
    models = {(0, 1): _fixed([0.0], 1.0), (1, 2): _fixed([0.0], 1.0), (0, 2): _fixed([0.0], -1.0)}
    m = OvoModel(models, ("a", "b", "c"))
    assert m.predict(np.zeros((1, 1))).tolist() == [0]


def test_ovo_requires_every_pair():
    with pytest.raises(ValueError):
        OvoModel({(0, 1): _fixed([1.0], 0.0)}, ("a", "b", "c"))


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("C", [0.1, 1.0, 100.0])
def test_cascade_on_star_equals_ova(seed, C):
    rng = np.random.default_rng(seed)
    d = blobs(rng, K=4, n_per=5, sep=1.0)
    cfg = BinaryTrainConfig(C=C, seed=seed)
    ova = train_ova(d.X, d.labels, d.species_codes, cfg=cfg)
    cas = train_cascade(star_tree(d.species_codes), d.X, d.labels, d.species_codes, cfg=cfg)
    Q = rng.normal(size=(50, d.p)) * 3
    assert np.array_equal(cas.predict(Q), ova.predict(Q))


def test_cascade_follows_the_tree(toy_data, toy_tree):
    m = train_cascade(toy_tree, toy_data.X, toy_data.labels, toy_data.species_codes, cfg=CFG)
    assert set(m.nodes) == set(toy_tree.internal_nodes())
    assert (m.predict(toy_data.X) == toy_data.labels).mean() > 0.9
    path = m.decision_path(toy_data.X[0])
    assert path[0] == toy_tree.root and not toy_tree.children[path[-1]]
    assert toy_tree.names[path[-1]] == toy_data.species_codes[predict_cascade(m, toy_data.X[0])]
    # a single-child node (g3 -> E) is a passthrough
    g3 = toy_tree.names.index("g3")
    assert m.nodes[g3].models == ()


def test_cascade_records_unreachable_children(toy_data, toy_tree):
    keep = toy_data.labels != toy_data.species_codes.index("B")
    sub = toy_data.subset(np.flatnonzero(keep))
    m = train_cascade(toy_tree, sub.X, sub.labels, sub.species_codes, cfg=CFG)
    g1 = toy_tree.names.index("g1")
    assert m.nodes[g1].unreachable == (toy_tree.leaf("B"),)
    assert toy_data.species_codes.index("B") not in set(m.predict(toy_data.X).tolist())


def test_cascade_chain_tree(rng):
    d = blobs(rng, K=2)
    tree = parse_tree("(((S0)a)b,S1)r;")
    m = train_cascade(tree, d.X, d.labels, d.species_codes, cfg=CFG)
    assert np.array_equal(m.predict(d.X), d.labels)


def test_cascade_round_trip(toy_data, toy_tree):
    m = train_cascade(toy_tree, toy_data.X, toy_data.labels, toy_data.species_codes, cfg=CFG)
    back = CascadeModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.predict(toy_data.X), m.predict(toy_data.X))
    with pytest.raises(ValueError, match="dimension"):
        m.predict(np.ones((1, toy_data.p + 1)))


def test_ova_ovo_round_trip(toy_data):
    for cls, train in ((OvaModel, train_ova), (OvoModel, train_ovo)):
        m = train(toy_data.X, toy_data.labels, toy_data.species_codes, cfg=CFG)
        back = cls.from_dict(m.to_dict())
        np.testing.assert_array_equal(back.predict(toy_data.X), m.predict(toy_data.X))


def test_complete_linkage_small_example():
    P = np.array([[0.0], [1.0], [10.0]])
    assert complete_linkage(P) == [(0, 1, 1.0), (2, 3, 10.0)]


def test_complete_linkage_tie_goes_to_smallest_pair():
    P = np.array([[0.0], [1.0], [2.0]])
    assert complete_linkage(P)[0] == (0, 1, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_complete_linkage_matches_scipy(seed):
    hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
    P = np.random.default_rng(seed).normal(size=(9, 4))
    ref = hierarchy.linkage(P, method="complete", metric="euclidean")
    ours = complete_linkage(P)
    np.testing.assert_allclose([d for _, _, d in ours], ref[:, 2], rtol=1e-12)
    assert [tuple(sorted((a, b))) for a, b, _ in ours] == [tuple(sorted(map(int, r[:2]))) for r in ref]


def test_dendrogram_shape_and_permutation_invariance(toy_data):
    t = build_dendrogram(toy_data.X, toy_data.labels, toy_data.species_codes)
    K = toy_data.K
    assert len(t.internal_nodes()) == K - 1
    assert set(t.leaves) == set(toy_data.species_codes)
    assert all(len(t.children[u]) == 2 for u in t.internal_nodes())
    perm = np.random.default_rng(0).permutation(toy_data.n)
    t2 = build_dendrogram(toy_data.X[perm], toy_data.labels[perm], toy_data.species_codes)
    assert np.array_equal(loss_matrix(t), loss_matrix(t2, t.leaves))


def test_prototypes_are_medians():
    X = np.array([[1.0, 0.0], [3.0, 0.0], [2.0, 9.0], [0.0, 5.0]])
    P = species_prototypes(X, np.array([0, 0, 0, 1]), 2)
    assert P.tolist() == [[2.0, 0.0], [0.0, 5.0]]
    with pytest.raises(ValueError):
        species_prototypes(X, np.array([0, 0, 0, 0]), 2)


def test_dendrogram_skips_absent_species(toy_data):
    keep = np.flatnonzero(toy_data.labels != 2)
    sub = toy_data.subset(keep)
    t = build_dendrogram(sub.X, sub.labels, sub.species_codes)
    assert set(t.leaves) == set(toy_data.species_codes) - {toy_data.species_codes[2]}
    m = train_cascade(t, sub.X, sub.labels, sub.species_codes, cfg=CFG)
    assert 2 not in set(m.predict(toy_data.X).tolist())
    one = toy_data.subset(np.flatnonzero(toy_data.labels == 4))
    t1 = build_dendrogram(one.X, one.labels, one.species_codes)
    m1 = train_cascade(t1, one.X, one.labels, one.species_codes, cfg=CFG)
    assert set(m1.predict(toy_data.X).tolist()) == {4}
