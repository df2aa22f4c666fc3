"""Structured-output SVM over species labels with a 1-slack cutting-plane solver.

A joint feature map is described by a ``K x B`` 0/1 indicator matrix ``A``:
``Psi(x, y)`` places a copy of ``x`` in every block ``b`` with ``A[y, b] = 1``.
The class-indicator map uses the identity (one block per species); the
tree-path map has one block per taxonomy node, switched on along the
root-to-leaf path of ``y``.  Scores of all labels are then
``(X @ W.T) @ A.T`` for a ``B x p`` block weight matrix ``W``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from taxosvm.taxonomy import TaxonomyTree, path_to_root


@dataclass(frozen=True)
class JointFeatureMap:
    kind: str
    indicator: np.ndarray
    species_codes: tuple
    block_names: tuple
    tree: TaxonomyTree | None = None

    @classmethod
    def class_indicator(cls, species_codes) -> "JointFeatureMap":
        codes = tuple(species_codes)
        return cls("class_indicator", np.eye(len(codes)), codes, codes)

    @classmethod
    def tree_path(cls, tree: TaxonomyTree, species_codes=None) -> "JointFeatureMap":
        """One block per node of ``tree``; label rows follow ``species_codes``."""
        codes = tuple(species_codes) if species_codes is not None else tree.leaves
        A = np.zeros((len(codes), tree.n_nodes))
        for k, code in enumerate(codes):
            A[k, path_to_root(tree, code)] = 1.0
        return cls("tree_path", A, codes, tuple(tree.names), tree)

    @property
    def K(self) -> int:
        return self.indicator.shape[0]

    @property
    def n_blocks(self) -> int:
        return self.indicator.shape[1]

    def active_blocks(self, y: int) -> list:
        return np.flatnonzero(self.indicator[y]).tolist()

    def joint_feature(self, x, y: int) -> np.ndarray:
        """``Psi(x, y)`` as a dense ``(n_blocks, p)`` array."""
        if not 0 <= y < self.K:
            raise ValueError(f"unknown label {y}")
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        return np.outer(self.indicator[y], x)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "species_codes": list(self.species_codes)}
        if self.tree is not None:
            d["tree"] = self.tree.to_dict()
        return d

    @classmethod
    def from_dict(cls, d) -> "JointFeatureMap":
        if d["kind"] == "class_indicator":
            return cls.class_indicator(d["species_codes"])
        return cls.tree_path(TaxonomyTree.from_dict(d["tree"]), d["species_codes"])


def joint_feature(fmap: JointFeatureMap, x, y: int) -> np.ndarray:
    return fmap.joint_feature(x, y)


@dataclass(frozen=True)
class StructTrainConfig:
    C: float = 1.0
    epsilon: float = 0.1
    rescaling: str = "slack"
    loss: np.ndarray | None = None
    max_cuts: int = 2000
    qp_tol: float = 1e-8
    qp_max_iter: int = 200_000
    prune_after: int = 50

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.rescaling not in ("slack", "margin"):
            raise ValueError("rescaling must be 'slack' or 'margin'")
        if self.loss is not None:
            check_loss_matrix(self.loss)


def check_loss_matrix(loss) -> None:
    loss = np.asarray(loss)
    K = loss.shape[0]
    if loss.shape != (K, K):
        raise ValueError("loss must be a square matrix")
    off = ~np.eye(K, dtype=bool)
    if np.any(np.diag(loss) != 0) or np.any(loss[off] <= 0) or np.any(loss != loss.T):
        raise ValueError("loss must be symmetric with zero diagonal and positive off-diagonal")


@dataclass(frozen=True)
class StructuredModel:
    weights: np.ndarray
    fmap: JointFeatureMap
    converged: bool = True
    n_cuts: int = 0
    n_iter: int = 0
    slack: float = 0.0
    gap: float = 0.0
    objective_trace: tuple = field(default=(), repr=False)

    @property
    def species_codes(self) -> tuple:
        return self.fmap.species_codes

    @property
    def p(self) -> int:
        return self.weights.shape[1]

    def scores(self, X) -> np.ndarray:
        """``(n, K)`` matrix of ``w . Psi(x, y)``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.p:
            raise ValueError(f"dimension mismatch: model has p={self.p}, input has {X.shape[1]}")
        return (X @ self.weights.T) @ self.fmap.indicator.T

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.scores(X), axis=1)

    def to_dict(self) -> dict:
        return {
            "map": self.fmap.to_dict(),
            "weights": self.weights.tolist(),
            "converged": self.converged,
            "n_cuts": self.n_cuts,
            "n_iter": self.n_iter,
            "slack": self.slack,
            "gap": self.gap,
        }

    @classmethod
    def from_dict(cls, d) -> "StructuredModel":
        return cls(
            weights=np.asarray(d["weights"], dtype=np.float64),
            fmap=JointFeatureMap.from_dict(d["map"]),
            converged=bool(d["converged"]),
            n_cuts=int(d["n_cuts"]),
            n_iter=int(d["n_iter"]),
            slack=float(d["slack"]),
            gap=float(d["gap"]),
        )


def score(m: StructuredModel, x, y: int) -> float:
    return float(m.scores(x)[0, y])


def predict(m: StructuredModel, x) -> int:
    """Highest-scoring label; ties go to the lowest species id."""
    return int(m.predict(x)[0])


def _loss(cfg: StructTrainConfig, K: int) -> np.ndarray:
    if cfg.loss is None:
        return 1.0 - np.eye(K)
    loss = np.asarray(cfg.loss, dtype=np.float64)
    if loss.shape != (K, K):
        raise ValueError(f"loss matrix is {loss.shape}, expected {(K, K)}")
    return loss


def violations(S, labels, loss, rescaling) -> np.ndarray:
    """``H[i, y]`` for score matrix ``S``; the true label's entry is ``-inf``."""
    n = S.shape[0]
    rows = np.arange(n)
    margin_gap = S - S[rows, labels][:, None]
    L = loss[labels]
    if rescaling == "slack":
        H = L * (1.0 + margin_gap)
    else:
        H = L + margin_gap
    H[rows, labels] = -np.inf
    return H


def separation_oracle(m: StructuredModel, x, y_true: int, cfg: StructTrainConfig):
    """Most violated wrong label for one example and its violation ``H``.

    Enumerates every ``y != y_true``; ties go to the lowest species id.
    """
    K = m.fmap.K
    H = violations(m.scores(x), np.array([y_true]), _loss(cfg, K), cfg.rescaling)[0]
    y_hat = int(np.argmax(H))
    return y_hat, float(H[y_hat])


def solve_simplex_qp(G, b, C, beta, tol=1e-8, max_iter=200_000):
    """Maximize ``b . beta - 1/2 beta' G beta`` over ``beta >= 0, sum(beta) <= C``.

    Pairwise (SMO-style) ascent with an implicit slack coordinate carrying the
    unused mass ``C - sum(beta)``; warm-started from ``beta``.  Returns the new
    ``beta`` and the number of pair updates.
    """
    m = b.shape[0]
    Ge = np.zeros((m + 1, m + 1))
    Ge[:m, :m] = G
    be = np.append(b, 0.0)
    x = np.append(beta, max(C - beta.sum(), 0.0))
    grad = be - Ge @ x
    it = 0
    while it < max_iter:
        i = int(np.argmax(grad))
        has_mass = x > 0.0
        masked = np.where(has_mass, grad, np.inf)
        j = int(np.argmin(masked))
        if grad[i] - grad[j] <= tol:
            break
        curv = Ge[i, i] + Ge[j, j] - 2.0 * Ge[i, j]
        t = x[j] if curv <= 0.0 else min((grad[i] - grad[j]) / curv, x[j])
        x[i] += t
        x[j] -= t
        if x[j] < 1e-300:
            x[j] = 0.0
        grad -= t * (Ge[:, i] - Ge[:, j])
        it += 1
    return x[:m], it


def dual_value(G, b, beta) -> float:
    return float(b @ beta - 0.5 * beta @ G @ beta)


def train_one_slack(X, labels, fmap: JointFeatureMap, cfg: StructTrainConfig, gram=None) -> StructuredModel:
    """1-slack cutting-plane training in the dual.

    Each iteration runs the separation oracle on every example, aggregates
    the most violated labelings into one cut ``(a, b)`` (mean loss-weighted
    joint-feature differences and mean loss), and stops when the cut's
    violation ``b - w . a`` exceeds the working-set slack by at most
    ``cfg.epsilon``.  Otherwise the cut joins the working set and the
    restricted dual is re-solved from the previous solution.

    A cut is kept as its ``(n, B)`` coefficient matrix ``D`` with
    ``a = D' X / n``, so all inner products go through the Gram matrix
    ``gram = X X'`` (computed here when not supplied).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, p = X.shape
    if n == 0:
        raise ValueError("training set is empty")
    Kx = X @ X.T if gram is None else np.asarray(gram, dtype=np.float64)
    A = fmap.indicator
    K, B = A.shape
    loss = _loss(cfg, K)
    n2 = float(n) * n

    E = np.zeros((n, B))
    KE = np.zeros((n, B))
    cuts_D: list = []
    cuts_KD: list = []
    cuts_b: list = []
    G = np.zeros((0, 0))
    beta = np.zeros(0)
    idle = []
    trace = []
    converged = False
    gap = np.inf
    slack = 0.0
    it = 0
    while True:
        it += 1
        S = (KE @ A.T) / n
        H = violations(S, labels, loss, cfg.rescaling)
        y_hat = np.argmax(H, axis=1)
        h = H[np.arange(n), y_hat]
        active = h > 0.0
        dl = np.where(active, loss[labels, y_hat], 0.0)
        coef = dl if cfg.rescaling == "slack" else active.astype(np.float64)
        D = (A[labels] - A[y_hat]) * coef[:, None]
        KD = Kx @ D
        b = float(dl.sum()) / n
        viol = b - float(np.vdot(KE, D)) / n2
        slack = max(0.0, max((cb - float(np.vdot(KE, cd)) / n2 for cd, cb in zip(cuts_D, cuts_b)), default=0.0))
        gap = viol - slack
        if gap <= cfg.epsilon:
            converged = True
            break
        if len(cuts_D) >= cfg.max_cuts:
            break

        row = np.array([float(np.vdot(cd, KD)) / n2 for cd in cuts_D])
        m = len(cuts_D)
        G2 = np.empty((m + 1, m + 1))
        G2[:m, :m] = G
        G2[m, :m] = G2[:m, m] = row
        G2[m, m] = float(np.vdot(D, KD)) / n2
        G = G2
        cuts_D.append(D)
        cuts_KD.append(KD)
        cuts_b.append(b)
        beta = np.append(beta, 0.0)
        idle.append(0)
        bvec = np.array(cuts_b)

        before = dual_value(G, bvec, beta)
        beta, _ = solve_simplex_qp(G, bvec, cfg.C, beta, cfg.qp_tol, cfg.qp_max_iter)
        obj = dual_value(G, bvec, beta)
        assert obj >= before - 1e-9 * max(1.0, abs(before)), "restricted dual decreased"
        if trace:
            assert obj >= trace[-1] - 1e-9 * max(1.0, abs(trace[-1])), "restricted dual decreased"
        trace.append(obj)

        idle = [k + 1 if c < 1e-12 else 0 for k, c in zip(idle, beta)]
        keep = [k < cfg.prune_after for k in idle]
        if not all(keep):
            sel = np.flatnonzero(keep)
            cuts_D = [cuts_D[k] for k in sel]
            cuts_KD = [cuts_KD[k] for k in sel]
            cuts_b = [cuts_b[k] for k in sel]
            idle = [idle[k] for k in sel]
            beta = beta[sel]
            G = G[np.ix_(sel, sel)]
        E = np.zeros((n, B))
        KE = np.zeros((n, B))
        for c, cd, ckd in zip(beta, cuts_D, cuts_KD):
            if c != 0.0:
                E += c * cd
                KE += c * ckd

    W = (E.T @ X) / n
    return StructuredModel(
        weights=W,
        fmap=fmap,
        converged=converged,
        n_cuts=len(cuts_D),
        n_iter=it,
        slack=slack,
        gap=float(gap),
        objective_trace=tuple(trace),
    )
