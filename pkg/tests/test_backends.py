import os
import subprocess
import sys

import numpy as np
import pytest

from taxosvm import kernels
from taxosvm.linear import BinaryTrainConfig, train_binary

AVAILABLE = sorted(kernels.BACKENDS)
needs_both = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled core not built")


def split_oracle(X, y, weight, features, n_classes):
    """Brute force over every midpoint threshold of every candidate feature."""
    best = (-np.inf, -1, 0.0)
    for f in features:
        vals = np.unique(X[weight > 0, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = 0.5 * (lo + hi)
            s = 0.0
            for side in (X[:, f] <= thr, X[:, f] > thr):
                c = np.bincount(y[side], weights=weight[side], minlength=n_classes)
                s += (c * c).sum() / c.sum()
            if s > best[0] + 1e-12:
                best = (s, f, thr)
    return best


@pytest.mark.parametrize("name", AVAILABLE)
@pytest.mark.parametrize("seed", range(5))
def test_best_split_matches_brute_force(name, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 6))
    y = rng.integers(0, 3, size=30)
    weight = rng.integers(0, 3, size=30).astype(float)
    order_t = np.argsort(X, axis=0, kind="stable").T.astype(np.int64).copy()
    feats = np.array([4, 1, 3], dtype=np.int64)
    c = np.bincount(y, weights=weight, minlength=3)
    parent = float((c * c).sum() / c.sum())
    f, thr, score = kernels.get_backend(name).best_split(X, order_t, y, weight, feats, 3, parent)
    ref = split_oracle(X, y, weight, feats, 3)
    if ref[0] > parent * (1 + 1e-12):
        assert (f, thr) == (ref[1], pytest.approx(ref[2]))
        assert score == pytest.approx(ref[0], rel=1e-12)
    else:
        assert f == -1


@needs_both
@pytest.mark.parametrize("seed", range(4))
def test_cd_epoch_agrees(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(50, 10))
    y = np.where(rng.random(50) < 0.5, 1.0, -1.0)
    Kb = X @ X.T + 1.0
    out = []
    for name in ("cython", "python"):
        alpha, grad = np.zeros(50), -np.ones(50)
        for epoch in range(5):
            perm = np.random.default_rng([seed, epoch]).permutation(50).astype(np.int64)
            kernels.get_backend(name).cd_epoch(Kb, y, alpha, grad, perm, 0.5)
        out.append((alpha, grad))
    np.testing.assert_allclose(out[0][0], out[1][0], rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(out[0][1], out[1][1], rtol=1e-10, atol=1e-12)


@needs_both
def test_binary_svm_agrees_across_backends():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(120, 40))
    y = np.sign(X[:, 0] + 0.5 * rng.normal(size=120))
    cfg = BinaryTrainConfig(C=1.0)
    a = train_binary(X, y, cfg, backend="cython")
    b = train_binary(X, y, cfg, backend="python")
    assert a.n_iter == b.n_iter
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-9)


def test_env_var_forces_python_backend():
    env = dict(os.environ, TAXOSVM_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import taxosvm; print(taxosvm.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
