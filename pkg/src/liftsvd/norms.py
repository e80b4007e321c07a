"""Sampling lower bounds on component induced norms, and the component ordering.

A sampler can only ever *falsify* a declared bound: the best ratio
|f_i(x)| / ||x|| it finds is a lower bound on the true supremum.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError
from .expr import FunctionSpec, evaluate_batch
from .sampling import sphere_shells

REFINE_STEPS = 100
VIOLATION_RTOL = 1e-9


@dataclass(frozen=True)
class NormEstimate:
    component: int
    lower_bound: float
    declared_bound: float
    witness: tuple
    samples_used: int

    @property
    def valid(self) -> bool:
        """Whether the declared bound survived sampling."""
        return self.lower_bound <= self.declared_bound * (1 + VIOLATION_RTOL)

    def to_dict(self):
        return {
            "component": self.component,
            "lower_bound": self.lower_bound,
            "declared_bound": self.declared_bound,
            "witness": list(self.witness),
            "samples_used": self.samples_used,
            "valid": self.valid,
        }


@dataclass(frozen=True)
class ComponentOrdering:
    """``perm[i]`` is the original index of the i-th largest bound (0-based)."""

    perm: tuple
    inverse: tuple

    @property
    def p(self):
        return len(self.perm)

    def apply(self, values):
        """Reorder original-order values into ranked order (last axis)."""
        return np.asarray(values)[..., list(self.perm)]

    def matrix(self):
        """Permutation P with (P y)_i = y_{perm[i]}."""
        P = np.zeros((self.p, self.p))
        P[np.arange(self.p), list(self.perm)] = 1.0
        return P


def order_components(bounds) -> ComponentOrdering:
    bounds = [float(b) for b in bounds]
    if any(b < 0 for b in bounds):
        raise ValueError("bounds must be non-negative")
    # sorted() is stable, so ties keep the lower original index first
    perm = tuple(sorted(range(len(bounds)), key=lambda i: -bounds[i]))
    inverse = [0] * len(perm)
    for rank, orig in enumerate(perm):
        inverse[orig] = rank
    return ComponentOrdering(perm=perm, inverse=tuple(inverse))


def _ratios(expr, X):
    values, ok = evaluate_batch(expr, X)
    norms = np.linalg.norm(X, axis=1)
    ok &= norms > 0
    r = np.full(X.shape[0], -np.inf)
    r[ok] = np.abs(values[ok]) / norms[ok]
    return r


def estimate_component_norm(f: FunctionSpec, i: int, budget: int = 10_000,
                            restarts: int = 8, seed: int = 0) -> NormEstimate:
    """Lower-bound ||f_i||_{2-2} by random search plus coordinate refinement.

    ``budget`` points are drawn on spheres of random radii inside the domain
    box. The best ``restarts`` of them are then refined by coordinate search
    for a fixed 100 steps, halving a start's step size whenever no coordinate
    move improves it. Points where the component is undefined are skipped.
    The RNG stream is derived from ``(seed, i)``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not 0 <= i < f.p:
        raise IndexError(f"component {i} out of range for p={f.p}")
    rng = np.random.default_rng([seed, i])
    box = f.box_array
    expr = f.components[i]

    X = sphere_shells(rng, box, budget)
    r = _ratios(expr, X)
    if not np.isfinite(r).any():
        raise EstimationError(f"component {i}: every sample hit a domain error")

    k = min(max(restarts, 1), int(np.isfinite(r).sum()))
    top = np.argsort(-r, kind="stable")[:k]
    P = X[top].copy()
    R = r[top].copy()
    h = 0.1 * np.linalg.norm(P, axis=1)
    used = budget
    n = f.n
    moves = np.vstack([np.eye(n), -np.eye(n)])  # (2n, n)

    for _ in range(REFINE_STEPS):
        cand = P[:, None, :] + h[:, None, None] * moves[None, :, :]
        cand = np.clip(cand, box[:, 0], box[:, 1]).reshape(-1, n)
        cr = _ratios(expr, cand).reshape(k, 2 * n)
        used += cand.shape[0]
        best = np.argmax(cr, axis=1)
        best_r = cr[np.arange(k), best]
        improved = best_r > R
        P[improved] = cand.reshape(k, 2 * n, n)[improved, best[improved]]
        R[improved] = best_r[improved]
        h[~improved] *= 0.5

    j = int(np.argmax(R))
    return NormEstimate(component=i, lower_bound=float(R[j]),
                        declared_bound=f.norm_bounds[i],
                        witness=tuple(float(v) for v in P[j]), samples_used=used)


def estimate_norms(f: FunctionSpec, budget=10_000, restarts=8, seed=0):
    return [estimate_component_norm(f, i, budget, restarts, seed) for i in range(f.p)]


def validate_bounds(f: FunctionSpec, estimates):
    """Return the estimates whose lower bound exceeds the declared bound."""
    if len(estimates) != f.p:
        raise ValueError("need one estimate per component")
    return [est for est in estimates
            if est.lower_bound > f.norm_bounds[est.component] * (1 + VIOLATION_RTOL)]
