"""L2-regularized L1-hinge binary linear SVM trained by dual coordinate descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from taxosvm import kernels


@dataclass(frozen=True)
class BinaryTrainConfig:
    C: float = 1.0
    tol: float = 1e-3
    max_iter: int = 100_000
    bias_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if self.bias_scale < 0:
            raise ValueError("bias_scale must be nonnegative")


@dataclass(frozen=True)
class LinearModel:
    """Hyperplane ``w . x + b``.

    ``degenerate`` marks the constant predictor returned when the training
    labels contain a single class; ``n_iter`` and ``converged`` report the
    solver run.
    """

    weights: np.ndarray
    bias: float
    degenerate: bool = False
    converged: bool = True
    n_iter: int = 0
    alpha: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def p(self) -> int:
        return self.weights.shape[0]

    def decision(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.p:
            raise ValueError(f"dimension mismatch: model has p={self.p}, input has {X.shape[-1]}")
        return X @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "degenerate": self.degenerate,
            "converged": self.converged,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d) -> "LinearModel":
        return cls(
            weights=np.asarray(d["weights"], dtype=np.float64),
            bias=float(d["bias"]),
            degenerate=bool(d["degenerate"]),
            converged=bool(d["converged"]),
            n_iter=int(d["n_iter"]),
        )


def decision_value(m: LinearModel, x) -> float:
    return float(m.decision(np.asarray(x, dtype=np.float64).reshape(-1)))


def projected_gradient(X, y, alpha, C, bias_scale=1.0) -> np.ndarray:
    """Projected gradient of the box-constrained dual at ``alpha``, recomputed from scratch."""
    ya = alpha * y
    g = y * (X @ (ya @ X) + bias_scale * bias_scale * ya.sum()) - 1.0
    pg = g.copy()
    pg[(alpha <= 0.0) & (g > 0.0)] = 0.0
    pg[(alpha >= C) & (g < 0.0)] = 0.0
    return pg


def primal_objective(X, y, weights, bias, C, bias_scale=1.0) -> float:
    """Primal value with the bias penalized through its augmented-feature weight."""
    margins = y * (X @ weights + bias)
    wb = bias / bias_scale if bias_scale > 0 else 0.0
    return 0.5 * float(weights @ weights + wb * wb) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def dual_objective(X, y, alpha, bias_scale=1.0) -> float:
    ya = alpha * y
    w = ya @ X
    b = bias_scale * ya.sum()
    return float(alpha.sum()) - 0.5 * float(w @ w + b * b)


def train_binary(X, y, cfg: BinaryTrainConfig = BinaryTrainConfig(), gram=None, backend=None) -> LinearModel:
    """Fit ``min 1/2 |w|^2 + C sum hinge(y_i (w . x_i + b))``.

    The bias is an extra weight on a constant feature ``cfg.bias_scale`` (so
    it is regularized like the other weights).  The dual is solved by
    coordinate descent on the Gram matrix ``X X'`` (pass ``gram`` to reuse a
    precomputed one), visiting coordinates in a fresh seeded permutation
    every epoch.  Training stops once the largest projected-gradient
    magnitude is at most ``cfg.tol``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64).reshape(-1)
    n, p = X.shape
    if n == 0 or y.shape[0] != n:
        raise ValueError("need at least one example and one label per example")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    classes = np.unique(y)
    if classes.size == 1:
        return LinearModel(
            weights=np.zeros(p), bias=float(classes[0]), degenerate=True, converged=True
        )

    kern = kernels.get_backend(backend)
    bs = cfg.bias_scale
    K = X @ X.T if gram is None else np.asarray(gram, dtype=np.float64)
    if K.shape != (n, n):
        raise ValueError(f"gram matrix is {K.shape}, expected {(n, n)}")
    Kb = np.ascontiguousarray(K + bs * bs)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    rng = np.random.default_rng(cfg.seed)
    converged = False
    epoch = 0
    while epoch < cfg.max_iter:
        perm = rng.permutation(n).astype(np.int64)
        kern.cd_epoch(Kb, y, alpha, grad, perm, cfg.C)
        epoch += 1
        if __debug__:
            assert alpha.min() >= 0.0 and alpha.max() <= cfg.C, "dual coefficient left [0, C]"
        pg = np.where((alpha <= 0.0) & (grad > 0.0), 0.0, grad)
        pg = np.where((alpha >= cfg.C) & (grad < 0.0), 0.0, pg)
        if np.abs(pg).max() <= cfg.tol:
            converged = True
            break
    ya = alpha * y
    return LinearModel(
        weights=ya @ X,
        bias=float(bs * bs * ya.sum()),
        converged=converged,
        n_iter=epoch,
        alpha=alpha,
    )
