import numpy as np
import pytest

from taxosvm.linear import (
    BinaryTrainConfig,
    LinearModel,
    decision_value,
    dual_objective,
    primal_objective,
    projected_gradient,
    train_binary,
)


def random_problem(rng, n=40, p=8, flip=0.15):
    X = rng.normal(size=(n, p))
    w = rng.normal(size=p)
    y = np.sign(X @ w + 0.3)
    y[y == 0] = 1.0
    y[rng.random(n) < flip] *= -1
    if np.unique(y).size == 1:
        y[0] = -y[0]
    return X, y


def test_one_dimensional_analytic():
    X = np.array([[-1.0], [1.0]])
    y = np.array([-1.0, 1.0])
    m = train_binary(X, y, BinaryTrainConfig(C=10.0, tol=1e-10))
    # max margin with a regularized bias: w = 1, b = 0
    assert m.weights[0] == pytest.approx(1.0, abs=1e-8)
    assert m.bias == pytest.approx(0.0, abs=1e-8)
    assert decision_value(m, [0.5]) == pytest.approx(0.5, abs=1e-8)


def test_single_class_is_degenerate():
    X = np.ones((3, 2))
    m = train_binary(X, np.ones(3))
    assert m.degenerate and m.bias == 1.0
    assert np.all(m.decision(np.random.default_rng(0).normal(size=(5, 2))) == 1.0)
    m = train_binary(X, -np.ones(3))
    assert m.bias == -1.0


def test_separable_toy_is_fit_exactly(rng):
    X = np.concatenate([rng.normal(size=(10, 3)) + 4, rng.normal(size=(10, 3)) - 4])
    y = np.repeat([1.0, -1.0], 10)
    m = train_binary(X, y, BinaryTrainConfig(C=100.0))
    assert np.all(np.sign(m.decision(X)) == y)
    assert m.converged


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("C", [0.01, 1.0, 100.0])
def test_dual_feasibility_and_gap(seed, C):
    rng = np.random.default_rng(seed)
    X, y = random_problem(rng)
    cfg = BinaryTrainConfig(C=C, tol=1e-3, seed=seed)
    m = train_binary(X, y, cfg)
    a = m.alpha
    assert m.converged
    assert a.min() >= 0.0 and a.max() <= C
    pg = projected_gradient(X, y, a, C)
    assert np.abs(pg).max() <= cfg.tol * (1 + 1e-6)
    P = primal_objective(X, y, m.weights, m.bias, C)
    D = dual_objective(X, y, a)
    gap = P - D
    # weak duality, and every coordinate with |PG| <= tol contributes at most C * tol
    assert gap >= -1e-9 * max(1.0, abs(P))
    n = X.shape[0]
    assert gap <= C * n * cfg.tol * (1 + np.abs(X).sum(axis=1).max())
    assert gap <= C * n * cfg.tol + 1e-9


def test_primal_matches_cvxpy_oracle(rng):
    cp = pytest.importorskip("cvxpy")
    X, y = random_problem(rng, n=30, p=4)
    C = 0.7
    w, b = cp.Variable(4), cp.Variable()
    obj = 0.5 * cp.sum_squares(w) + 0.5 * cp.square(b) + C * cp.sum(cp.pos(1 - cp.multiply(y, X @ w + b)))
    best = cp.Problem(cp.Minimize(obj)).solve()
    m = train_binary(X, y, BinaryTrainConfig(C=C, tol=1e-6))
    P = primal_objective(X, y, m.weights, m.bias, C)
    assert best - 1e-5 <= P <= best + C * 30 * 1e-6 + 1e-5


def test_deterministic_given_seed(rng):
    X, y = random_problem(rng)
    cfg = BinaryTrainConfig(C=1.0, seed=3)
    a, b = train_binary(X, y, cfg), train_binary(X, y, cfg)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_gram_argument_matches(rng):
    X, y = random_problem(rng)
    cfg = BinaryTrainConfig(C=2.0)
    a = train_binary(X, y, cfg)
    b = train_binary(X, y, cfg, gram=X @ X.T)
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-12)
    with pytest.raises(ValueError, match="gram"):
        train_binary(X, y, cfg, gram=np.eye(3))


def test_scale_invariance(rng):
    X, y = random_problem(rng)
    c = 4.0
    a = train_binary(X, y, BinaryTrainConfig(C=1.0, tol=1e-8))
    b = train_binary(c * X, y, BinaryTrainConfig(C=1.0 / c ** 2, tol=1e-8, bias_scale=c))
    np.testing.assert_allclose(b.weights * c, a.weights, atol=1e-6)
    np.testing.assert_allclose(b.bias, a.bias, atol=1e-6)
    np.testing.assert_array_equal(np.sign(b.decision(c * X)), np.sign(a.decision(X)))


def test_iteration_cap_flags_non_convergence(rng):
    X, y = random_problem(rng, n=60, flip=0.3)
    m = train_binary(X, y, BinaryTrainConfig(C=100.0, tol=1e-12, max_iter=1))
    assert not m.converged and m.n_iter == 1


def test_bad_inputs():
    with pytest.raises(ValueError):
        BinaryTrainConfig(C=0.0)
    with pytest.raises(ValueError):
        train_binary(np.ones((2, 2)), np.array([0.0, 1.0]))
    m = LinearModel(np.ones(3), 0.0)
    with pytest.raises(ValueError, match="dimension"):
        m.decision(np.ones((2, 4)))


def test_dict_round_trip(rng):
    X, y = random_problem(rng)
    m = train_binary(X, y)
    back = LinearModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.decision(X), m.decision(X))
