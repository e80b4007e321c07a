"""Sampled certificates for the guarantees of a decomposition.

Each check reduces to one scalar ``max_violation`` compared against a fixed
threshold. Sampling is deterministic per seed (see
:func:`liftsvd.sampling.certification_points`); points where f is undefined
are skipped.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .expr import eval_f_batch
from .liftcore import (Decomposition, SigmaSpec, admissibility_sum, compute_S_batch,
                       reconstruct_batch, unlift_batch)
from .sampling import certification_points

RECONSTRUCTION_TOL = 1e-9
NORM_TOL = 1e-12
ROUNDTRIP_TOL = 1e-10


@dataclass(frozen=True)
class Certificate:
    name: str
    max_violation: float
    threshold: float
    samples: int
    witness: tuple = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.threshold

    def to_dict(self):
        return {
            "name": self.name,
            "max_violation": self.max_violation,
            "threshold": self.threshold,
            "samples": self.samples,
            "witness": None if self.witness is None else list(self.witness),
            "pass": self.passed,
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, d):
        witness = d.get("witness")
        return cls(name=d["name"], max_violation=float(d["max_violation"]),
                   threshold=float(d["threshold"]), samples=int(d["samples"]),
                   witness=None if witness is None else tuple(witness),
                   details=dict(d.get("details", {})))


def dumps(certificates) -> str:
    return json.dumps([c.to_dict() for c in certificates], indent=2, sort_keys=True) + "\n"


def loads(text):
    return [Certificate.from_dict(d) for d in json.loads(text)]


def sample_points(dec: Decomposition, samples: int, seed: int, points=None):
    """Return ``(X, F)`` restricted to points where f is defined (0 is always kept)."""
    f = dec.function
    if points is None:
        if samples < 1:
            raise ValueError("samples must be >= 1")
        X = certification_points(f.box_array, samples, seed)
    else:
        X = np.atleast_2d(np.asarray(points, dtype=float))
    F, ok = eval_f_batch(f, X)
    zero = np.linalg.norm(X, axis=1) == 0
    F[zero] = 0.0
    keep = ok | zero
    return X[keep], F[keep]


def _worst(values, X):
    if values.size == 0:
        return 0.0, None
    k = int(np.argmax(values))
    return float(values[k]), tuple(float(t) for t in X[k])


def certify_reconstruction(dec: Decomposition, samples=10_000, seed=0, points=None):
    """max ||U Sigma v(x) - f(x)|| / max(1, ||f(x)||) against 1e-9."""
    X, F = sample_points(dec, samples, seed, points)
    batch = dec.lift_batch(X, F=F)
    err = np.linalg.norm(reconstruct_batch(batch, dec) - F, axis=1)
    viol = err / np.maximum(1.0, np.linalg.norm(F, axis=1))
    worst, witness = _worst(viol, X)
    return Certificate("reconstruction", worst, RECONSTRUCTION_TOL, X.shape[0], witness)


def certify_envelope(dec: Decomposition, samples=10_000, seed=0, points=None):
    """max ||f(x)|| / (sigma_1 ||x||) against 1.

    Only the non-strict inequality can be checked by sampling; the observed
    margin ``1 - max ratio`` is reported in ``details``.
    """
    sigma1 = dec.sigma1
    if sigma1 <= 0:
        raise ValueError("envelope certificate needs sigma_1 > 0")
    X, F = sample_points(dec, samples, seed, points)
    compute_S_batch(X, F, dec.sigma_spec)  # understated bounds raise here
    xnorm = np.linalg.norm(X, axis=1)
    nz = xnorm > 0
    ratio = np.linalg.norm(F[nz], axis=1) / (sigma1 * xnorm[nz])
    worst, witness = _worst(ratio, X[nz])
    return Certificate("envelope", worst, 1.0, X.shape[0], witness,
                       details={"sigma_1": sigma1, "margin": 1.0 - worst})


def certify_norm_preservation(dec: Decomposition, samples=10_000, seed=0, points=None,
                              lifting=None):
    """max | ||v(x)|| - ||x|| | / max(1, ||x||) against 1e-12.

    ``lifting`` optionally replaces v with another map (rows in, rows out),
    which lets a non-norm-preserving stand-in be shown to fail.
    """
    X, F = sample_points(dec, samples, seed, points)
    V = dec.lift_batch(X, F=F).V if lifting is None else np.atleast_2d(lifting(X))
    xnorm = np.linalg.norm(X, axis=1)
    viol = np.abs(np.linalg.norm(V, axis=1) - xnorm) / np.maximum(1.0, xnorm)
    worst, witness = _worst(viol, X)
    return Certificate("norm_preservation", worst, NORM_TOL, X.shape[0], witness)


def certify_injectivity(dec: Decomposition, samples=10_000, seed=0, points=None):
    """Round trip through the left inverse, plus distinctness of the lifted samples.

    Any collision of lifted values among distinct inputs sets the violation to inf.
    """
    X, F = sample_points(dec, samples, seed, points)
    X, first = np.unique(X, axis=0, return_index=True)
    F = F[first]
    V = dec.lift_batch(X, F=F).V
    back = unlift_batch(V, (dec.n, dec.p))
    viol = np.linalg.norm(back - X, axis=1) / np.maximum(1.0, np.linalg.norm(X, axis=1))
    worst, witness = _worst(viol, X)

    min_dist = float("inf")
    if X.shape[0] > 1:
        dist, idx = cKDTree(V).query(V, k=2)
        k = int(np.argmin(dist[:, 1]))
        min_dist = float(dist[k, 1])
        if min_dist == 0.0:
            worst, witness = float("inf"), tuple(float(t) for t in X[k])
    return Certificate("injectivity", worst, ROUNDTRIP_TOL, X.shape[0], witness,
                       details={"min_pairwise_distance": min_dist})


def certify_sigma_admissible(sigma_spec: SigmaSpec, bounds):
    """Exact check of descending order and sum b_(i)^2 / sigma_i^2 <= 1 - eta."""
    sigma = sigma_spec.array
    ranked = sigma_spec.ordering.apply(np.asarray(bounds, dtype=float))
    total = admissibility_sum(ranked, sigma)
    excess = total - (1.0 - sigma_spec.eta)
    order_gap = float(np.max(np.diff(sigma))) if sigma.size > 1 else 0.0
    violation = max(excess, order_gap, float(-sigma.min()), 0.0)
    return Certificate("sigma_admissible", violation, 0.0, 0, None,
                       details={"admissibility_sum": total,
                                "limit": 1.0 - sigma_spec.eta,
                                "descending": bool(order_gap <= 0)})


def run_all(dec: Decomposition, samples=10_000, seed=0):
    """The full suite in a fixed order (the envelope is skipped when sigma_1 = 0)."""
    certs = [
        certify_sigma_admissible(dec.sigma_spec, dec.function.norm_bounds),
        certify_reconstruction(dec, samples, seed),
    ]
    if dec.sigma1 > 0:
        certs.append(certify_envelope(dec, samples, seed))
    certs.append(certify_norm_preservation(dec, samples, seed))
    certs.append(certify_injectivity(dec, samples, seed))
    return certs
