import numpy as np
import pytest

from taxosvm import kernels
from taxosvm.baselines import (
    CentroidModel,
    ForestModel,
    NearestNeighborModel,
    default_mtry,
    grow_tree,
    predict_1nn,
    predict_centroid,
    predict_rf,
    train_1nn,
    train_centroid,
    train_rf,
)

from conftest import blobs


def test_default_mtry():
    assert default_mtry(1300) == 36
    assert default_mtry(1) == 1
    assert default_mtry(15) == 3


def test_rf_deterministic_and_fits_blobs(rng):
    d = blobs(rng, K=3, n_per=12, p=6)
    a = train_rf(d.X, d.labels, 3, n_trees=25, seed=4)
    b = train_rf(d.X, d.labels, 3, n_trees=25, seed=4)
    assert all(np.array_equal(s.threshold, t.threshold) for s, t in zip(a.trees, b.trees))
    assert np.array_equal(a.predict(d.X), d.labels)
    assert predict_rf(a, d.X[0]) == d.labels[0]
    c = train_rf(d.X, d.labels, 3, n_trees=25, seed=5)
    assert any(not np.array_equal(s.feature, t.feature) for s, t in zip(a.trees, c.trees))


def test_oob_rate_near_one_over_e(rng):
    X = rng.normal(size=(200, 3))
    y = (X[:, 0] > 0).astype(np.int64)
    m = train_rf(X, y, 2, n_trees=60, seed=0)
    expect = 60 * np.exp(-1.0)
    assert abs(m.oob_counts.mean() - expect) <= 0.2 * expect


def test_unbootstrapped_tree_is_pure(rng):
    X = rng.normal(size=(40, 5))
    y = rng.integers(0, 3, size=40)
    order_t = np.argsort(X, axis=0, kind="stable").T.astype(np.int64).copy()
    t = grow_tree(X, order_t, y, 3, np.ones(40), 5, np.random.default_rng(0))
    # distinct continuous values: a full tree separates every training point
    assert np.array_equal(t.predict(X), y)


def test_plurality_tie_goes_to_lowest_id():
    from taxosvm.baselines import DecisionTree

    leaf = lambda k: DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([k]))
    m = ForestModel((leaf(2), leaf(1), leaf(1), leaf(2)), 3, 1, 1, 0)
    assert m.predict(np.zeros((1, 1))).tolist() == [1]


def test_rf_round_trip_and_errors(rng):
    d = blobs(rng, K=2, p=4)
    m = train_rf(d.X, d.labels, 2, n_trees=5)
    back = ForestModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.predict(d.X), m.predict(d.X))
    with pytest.raises(ValueError, match="dimension"):
        m.predict(np.ones((1, 5)))
    with pytest.raises(ValueError, match="mtry"):
        train_rf(d.X, d.labels, 2, n_trees=1, mtry=9)


def test_1nn_matches_brute_force(rng):
    X = rng.normal(size=(30, 7))
    y = rng.integers(0, 4, size=30)
    Q = rng.normal(size=(25, 7))
    m = train_1nn(X, y)
    for q, got in zip(Q, m.predict(Q)):
        dist = [np.sqrt(np.sum((x - q) ** 2)) for x in X]
        assert got == y[int(np.argmin(dist))]
    assert np.array_equal(m.predict(X), y)
    assert predict_1nn(X, y, X[3]) == y[3]


def test_1nn_tie_lowest_index():
    m = NearestNeighborModel(np.array([[1.0], [-1.0]]), np.array([5, 2]))
    assert m.predict([[0.0]]).tolist() == [5]


def test_centroid_is_coordinatewise_median():
    X = np.array([[0.0, 0.0], [1.0, 10.0], [5.0, 1.0], [9.0, 9.0]])
    m = train_centroid(X, np.array([0, 0, 0, 1]), 3)
    assert m.centroids[0].tolist() == [1.0, 1.0]
    assert m.centroids[1].tolist() == [9.0, 9.0]
    assert np.all(np.isnan(m.centroids[2]))
    assert predict_centroid(m, [1.2, 0.9]) == 0
    assert m.predict([[8.0, 8.0]]).tolist() == [1]
    back = CentroidModel.from_dict(m.to_dict())
    assert np.array_equal(back.predict(X), m.predict(X))


def test_centroid_separates_two_species():
    X = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]])
    y = np.array([0, 0, 1, 1])
    assert np.array_equal(train_centroid(X, y, 2).predict(X), y)


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled core not built")
def test_forest_identical_across_backends(rng):
    X = np.round(rng.random((80, 20)), 2)  # coarse values force threshold ties
    y = rng.integers(0, 4, size=80)
    a = train_rf(X, y, 4, n_trees=10, seed=1, backend="cython")
    b = train_rf(X, y, 4, n_trees=10, seed=1, backend="python")
    for s, t in zip(a.trees, b.trees):
        assert np.array_equal(s.feature, t.feature)
        assert np.array_equal(s.threshold, t.threshold)
