"""The norm-preserving injective lifting behind f(x) = U Sigma v(x).

For admissible singular values sigma (ranked like the component norm bounds,
with sum_i b_i^2 / sigma_i^2 < 1) and x != 0, the auxiliary coordinates

    delta_i(x) = f_(i)(x) / (sigma_i * sqrt(1 - S(x))),
    S(x)       = sum_i f_(i)(x)^2 / (sigma_i^2 ||x||^2),

stacked over x and rescaled to length ||x|| give v(x), and Sigma v(x) returns
the ranked outputs exactly. ``delta_oracle`` reaches the same delta by
building the p x p system A delta^2 = ||x||^2 1 and solving it densely; it is
kept only as an independent check on the closed form.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import BoundViolationError, DomainError, InadmissibleSigmaError
from .expr import FunctionSpec, eval_f, eval_f_batch
from .norms import ComponentOrdering, order_components

log = logging.getLogger(__name__)

DEFAULT_ETA = 0.1


@dataclass(frozen=True)
class SigmaSpec:
    sigma: tuple  # ranked, descending
    eta: float
    ordering: ComponentOrdering
    n: int

    @property
    def p(self):
        return len(self.sigma)

    @property
    def m(self):
        return self.n + self.p

    @property
    def array(self):
        return np.array(self.sigma, dtype=float)


def admissibility_sum(ranked_bounds, sigma) -> float:
    """sum over nonzero bounds of b_i^2 / sigma_i^2 (inf if some sigma_i is 0)."""
    total = 0.0
    for b, s in zip(ranked_bounds, sigma):
        if b > 0:
            if s <= 0:
                return float("inf")
            total += (b / s) ** 2
    return total


def select_sigma(bounds, ordering: ComponentOrdering, eta: float = DEFAULT_ETA, *,
                 n: int) -> SigmaSpec:
    """sigma_i = b_(i) * sqrt(p_eff / (1 - eta)), so the admissibility sum is 1 - eta.

    ``bounds`` are in original component order; zero bounds get sigma_i = 0 and
    do not count towards ``p_eff``.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    ranked = [float(b) for b in ordering.apply(np.asarray(bounds, dtype=float))]
    if any(b < 0 for b in ranked):
        raise ValueError("bounds must be non-negative")
    p_eff = sum(1 for b in ranked if b > 0)
    if p_eff == 0:
        return SigmaSpec(tuple(0.0 for _ in ranked), float(eta), ordering, n)
    scale = np.sqrt(p_eff / (1.0 - eta))
    sigma = np.array([b * scale for b in ranked])
    # guard the last ulp so the sum never rounds above 1 - eta
    while admissibility_sum(ranked, sigma) > 1.0 - eta:
        sigma *= 1.0 + np.finfo(float).eps
    return SigmaSpec(tuple(float(s) for s in sigma), float(eta), ordering, n)


# -- batch core ------------------------------------------------------------

def _ranked_weights(F_ranked, xnorm, sigma):
    """w_ij = f_(j)(x_i)^2 / (sigma_j^2 ||x_i||^2); rows with x = 0 get 0."""
    N, p = F_ranked.shape
    W = np.zeros((N, p))
    nz = xnorm > 0
    pos = sigma > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = F_ranked[nz][:, pos] / (sigma[pos] * xnorm[nz][:, None])
    W[np.ix_(nz, pos)] = ratio ** 2
    # a zero singular value only tolerates an identically zero output
    bad = nz[:, None] & ~pos[None, :] & (F_ranked != 0)
    W[bad] = np.inf
    return W


def compute_S_batch(X, F, sigma_spec: SigmaSpec):
    """S and gamma = S - 1 per row; raises BoundViolationError if any S >= 1."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    F_ranked = sigma_spec.ordering.apply(np.atleast_2d(F))
    xnorm = np.linalg.norm(X, axis=1)
    S = _ranked_weights(F_ranked, xnorm, sigma_spec.array).sum(axis=1)
    if S.size and np.max(S) >= 1.0:
        k = int(np.argmax(S))
        raise BoundViolationError(X[k], S[k])
    if S.size and np.max(S) > 1.0 - sigma_spec.eta + 1e-12:
        log.warning("S exceeds 1 - eta (max %.6g): a declared bound is likely too small",
                    float(np.max(S)))
    return S, S - 1.0


def delta_batch(X, F, sigma_spec: SigmaSpec, S=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if S is None:
        S, _ = compute_S_batch(X, F, sigma_spec)
    F_ranked = sigma_spec.ordering.apply(np.atleast_2d(F))
    sigma = sigma_spec.array
    pos = sigma > 0
    D = np.zeros_like(F_ranked, dtype=float)
    nz = np.linalg.norm(X, axis=1) > 0
    scale = np.sqrt(1.0 - S[nz])
    D[np.ix_(nz, pos)] = F_ranked[nz][:, pos] / (sigma[pos] * scale[:, None])
    return D


def solve_delta_squared_batch(X, F, sigma_spec: SigmaSpec):
    """Solve A delta^2 = ||x||^2 1 with a dense solver, one system per row.

    A has diagonal d_i = sigma_i^2 ||x||^2 / f_(i)(x)^2 - 1 and -1 elsewhere.
    Returns the raw solutions (before any square root), shape (N, p).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    F_ranked = sigma_spec.ordering.apply(np.atleast_2d(F))
    sigma = sigma_spec.array
    xnorm = np.linalg.norm(X, axis=1)
    if np.any(sigma <= 0) or np.any(F_ranked == 0) or np.any(xnorm == 0):
        raise ValueError("oracle needs sigma > 0, x != 0 and every f_(i)(x) != 0")
    N, p = F_ranked.shape
    d = (sigma * xnorm[:, None] / F_ranked) ** 2 - 1.0
    A = np.full((N, p, p), -1.0)
    idx = np.arange(p)
    A[:, idx, idx] = d
    rhs = np.repeat((xnorm ** 2)[:, None], p, axis=1)[..., None]
    return np.linalg.solve(A, rhs)[..., 0]


def delta_oracle_batch(X, F, sigma_spec: SigmaSpec):
    sq = solve_delta_squared_batch(X, F, sigma_spec)
    if np.any(sq < 0):
        raise InadmissibleSigmaError(
            f"negative delta^2 component {float(sq.min())!r}: sigma is not admissible"
        )
    F_ranked = sigma_spec.ordering.apply(np.atleast_2d(F))
    return np.sign(F_ranked) * np.sqrt(sq)


# -- single-point API ------------------------------------------------------

def _one(x, f, F=None):
    X = np.asarray(x, dtype=float).reshape(1, -1)
    if F is None:
        F, ok = eval_f_batch(f, X)
        if not ok[0]:
            if np.linalg.norm(X) == 0:
                return X, np.zeros((1, f.p))
            eval_f(f, X[0])  # raises the DomainError with a reason
            raise DomainError("evaluation failed")
    return X, np.atleast_2d(F)


def compute_S(x, f: FunctionSpec, sigma_spec: SigmaSpec):
    """Return ``(S, gamma)`` at a single nonzero x."""
    X, F = _one(x, f)
    S, gamma = compute_S_batch(X, F, sigma_spec)
    return float(S[0]), float(gamma[0])


def delta(x, f: FunctionSpec, sigma_spec: SigmaSpec):
    X, F = _one(x, f)
    return delta_batch(X, F, sigma_spec)[0]


def delta_oracle(x, f: FunctionSpec, sigma_spec: SigmaSpec):
    X, F = _one(x, f)
    return delta_oracle_batch(X, F, sigma_spec)[0]


# -- lifted points ---------------------------------------------------------

@dataclass(frozen=True)
class LiftedPoint:
    x: np.ndarray
    fx: np.ndarray
    S: float
    gamma: float
    delta: np.ndarray
    x_delta: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class LiftedBatch:
    """Row-stacked lifted points."""

    X: np.ndarray
    F: np.ndarray
    S: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    x_delta: np.ndarray
    V: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, k):
        return LiftedPoint(x=self.X[k], fx=self.F[k], S=float(self.S[k]),
                           gamma=float(self.gamma[k]), delta=self.delta[k],
                           x_delta=self.x_delta[k], v=self.V[k])

    def write_csv(self, path):
        n, p, m = self.X.shape[1], self.delta.shape[1], self.V.shape[1]
        header = ([f"x_{i + 1}" for i in range(n)] + [f"delta_{i + 1}" for i in range(p)]
                  + [f"v_{i + 1}" for i in range(m)] + ["S"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(len(self)):
                w.writerow([repr(float(t)) for t in
                            (*self.X[k], *self.delta[k], *self.V[k], self.S[k])])


def lift_batch(X, f: FunctionSpec, sigma_spec: SigmaSpec, F=None) -> LiftedBatch:
    """Lift every row of X. Rows equal to 0 map to v = 0.

    Raises DomainError if f is undefined at some nonzero row, and
    BoundViolationError if the declared bounds are exceeded somewhere.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    xnorm = np.linalg.norm(X, axis=1)
    zero = xnorm == 0
    if F is None:
        F, ok = eval_f_batch(f, X)
        bad = ~ok & ~zero
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise DomainError(f"f undefined at x={X[k].tolist()}")
    F = np.array(F, dtype=float, copy=True)
    F[zero] = 0.0

    S, gamma = compute_S_batch(X, F, sigma_spec)
    D = delta_batch(X, F, sigma_spec, S=S)
    Xd = np.hstack([D, X])
    xd_norm = np.linalg.norm(Xd, axis=1)
    scale = np.zeros_like(xnorm)
    scale[~zero] = xnorm[~zero] / xd_norm[~zero]
    V = Xd * scale[:, None]
    return LiftedBatch(X=X, F=F, S=S, gamma=gamma, delta=D, x_delta=Xd, V=V)


def lift(x, f: FunctionSpec, sigma_spec: SigmaSpec) -> LiftedPoint:
    X, F = _one(x, f)
    return lift_batch(X, f, sigma_spec, F=F)[0]


def unlift_batch(V, dims):
    """Left inverse of v: rescale the trailing n coordinates to length ||v||."""
    n, p = dims
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[1] != n + p:
        raise ValueError(f"expected vectors of length {n + p}, got {V.shape[1]}")
    L = V[:, p:]
    vnorm = np.linalg.norm(V, axis=1)
    lnorm = np.linalg.norm(L, axis=1)
    if np.any((lnorm == 0) & (vnorm > 0)):
        raise ValueError("not in image of v: zero lower block with nonzero vector")
    out = np.zeros_like(L)
    nz = vnorm > 0
    out[nz] = L[nz] * (vnorm[nz] / lnorm[nz])[:, None]
    return out


def unlift(v_val, dims):
    return unlift_batch(np.asarray(v_val, dtype=float).reshape(1, -1), dims)[0]


# -- decomposition ---------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    """f(x) = U Sigma v(x); U undoes the norm ranking of the components."""

    function: FunctionSpec
    sigma_spec: SigmaSpec
    U: np.ndarray
    Sigma_matrix: np.ndarray

    @property
    def n(self):
        return self.function.n

    @property
    def p(self):
        return self.function.p

    @property
    def m(self):
        return self.sigma_spec.m

    @property
    def sigma1(self):
        return self.sigma_spec.sigma[0]

    def lift(self, x):
        return lift(x, self.function, self.sigma_spec)

    def lift_batch(self, X, F=None):
        return lift_batch(X, self.function, self.sigma_spec, F=F)

    def to_dict(self):
        ordering = self.sigma_spec.ordering
        return {
            "function": self.function.name,
            "n": self.n,
            "p": self.p,
            "m": self.m,
            "sigma": list(self.sigma_spec.sigma),
            "eta": self.sigma_spec.eta,
            "ordering": list(ordering.perm),
            # row r of U has its single 1 in column U[r]
            "U": list(ordering.inverse),
            "admissibility_sum": admissibility_sum(
                ordering.apply(np.array(self.function.norm_bounds)), self.sigma_spec.sigma),
        }


def sigma_matrix(sigma, m):
    p = len(sigma)
    out = np.zeros((p, m))
    out[np.arange(p), np.arange(p)] = sigma
    return out


def decompose(f: FunctionSpec, eta: float = DEFAULT_ETA) -> Decomposition:
    ordering = order_components(f.norm_bounds)
    spec = select_sigma(f.norm_bounds, ordering, eta, n=f.n)
    U = ordering.matrix().T
    return Decomposition(function=f, sigma_spec=spec, U=U,
                         Sigma_matrix=sigma_matrix(spec.sigma, spec.m))


def reconstruct_batch(batch: LiftedBatch, dec: Decomposition):
    return batch.V @ (dec.U @ dec.Sigma_matrix).T


def reconstruct(lp: LiftedPoint, dec: Decomposition):
    return dec.U @ (dec.Sigma_matrix @ lp.v)
