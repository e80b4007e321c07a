"""K = U Sigma V* factorizations of a lifted function and their subspaces.

Any orthogonal V* may be inserted between Sigma and the lifting:
f(x) = U Sigma V* (V v(x)) = K g(x) with g = V v. The right singular vectors
of K then split the lifted space into directions that reach f(x) and
directions (the kernel) that carry information about x lost by f.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotUnitaryError
from .expr import eval_f_batch
from .liftcore import Decomposition
from .sampling import uniform_box

SVD_MAX_DIM = 64
UNITARY_ATOL = 1e-10
KERNEL_RTOL = 1e-12


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Seeded random orthogonal matrix (QR of a Gaussian matrix, signs fixed by diag R)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def is_unitary(M, atol=UNITARY_ATOL) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return bool(np.allclose(M.T @ M, np.eye(M.shape[0]), rtol=0, atol=atol))


# -- small dense SVD -------------------------------------------------------

def _complete_basis(Q, dim):
    """Extend orthonormal columns Q (dim x k) to a dim x dim orthogonal matrix."""
    B = np.array(Q, dtype=float).reshape(dim, -1)
    while B.shape[1] < dim:
        # the standard basis vector least covered by B, orthogonalized twice
        R = np.eye(dim) - B @ B.T
        R -= B @ (B.T @ R)
        e = R[:, np.argmax(np.linalg.norm(R, axis=0))]
        B = np.column_stack([B, e / np.linalg.norm(e)])
    return B


def svd_small(M, max_sweeps=80):
    """Full SVD of a small real matrix by one-sided (Hestenes) Jacobi rotations.

    Returns ``(U, s, Vt)`` with U (r x r), s (min(r, c),) descending and
    Vt (c x c) so that ``M = U[:, :k] @ diag(s) @ Vt[:k]``. Signs are fixed so
    the largest-magnitude entry of each left singular vector is positive.
    """
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    r, c = A.shape
    if max(r, c) > SVD_MAX_DIM:
        raise ValueError(f"svd_small is capped at dimension {SVD_MAX_DIM}, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")

    W = A
    V = np.eye(c)
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        rotated = False
        for i in range(c - 1):
            for j in range(i + 1, c):
                wi, wj = W[:, i], W[:, j]
                a = wi @ wi
                b = wj @ wj
                g = wi @ wj
                if g == 0.0 or abs(g) <= eps * np.sqrt(a * b):
                    continue
                rotated = True
                if abs(b - a) > 1e8 * abs(g):
                    t = g / (b - a)  # small-angle limit; avoids overflow in zeta
                else:
                    zeta = (b - a) / (2.0 * g)
                    t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                cs = 1.0 / np.hypot(1.0, t)
                sn = cs * t
                W[:, [i, j]] = np.column_stack([cs * wi - sn * wj, sn * wi + cs * wj])
                vi, vj = V[:, i].copy(), V[:, j].copy()
                V[:, i] = cs * vi - sn * vj
                V[:, j] = sn * vi + cs * vj
        if not rotated:
            break

    norms = np.linalg.norm(W, axis=0)
    order = np.argsort(-norms, kind="stable")
    norms, W, V = norms[order], W[:, order], V[:, order]

    k = min(r, c)
    s = norms[:k]
    smax = s[0] if k else 0.0
    keep = s > max(r, c) * eps * smax if smax > 0 else np.zeros(k, dtype=bool)
    Ucols = W[:, :k][:, keep] / s[keep]
    U = _complete_basis(Ucols, r)
    Vt = V.T
    for j in range(int(keep.sum())):
        if U[np.argmax(np.abs(U[:, j])), j] < 0:
            U[:, j] *= -1
            Vt[j] *= -1
    return U, s, Vt


# -- K o g -----------------------------------------------------------------

@dataclass(frozen=True)
class KFactorization:
    decomposition: Decomposition
    Vstar: np.ndarray
    K: np.ndarray

    @property
    def U(self):
        return self.decomposition.U

    @property
    def Sigma_matrix(self):
        return self.decomposition.Sigma_matrix

    @property
    def function(self):
        return self.decomposition.function

    def g_batch(self, X, F=None):
        """g(x) = V v(x) for each row of X (V = V*^T)."""
        return self.decomposition.lift_batch(X, F=F).V @ self.Vstar

    def g(self, x):
        return self.g_batch(np.asarray(x, dtype=float).reshape(1, -1))[0]

    def apply_batch(self, X, F=None):
        return self.g_batch(X, F=F) @ self.K.T

    def to_dict(self):
        return {
            "K": self.K.tolist(),
            "U": self.U.tolist(),
            "Sigma": self.Sigma_matrix.tolist(),
            "Vstar": self.Vstar.tolist(),
        }


def compose_K(dec: Decomposition, Vstar) -> KFactorization:
    Vstar = np.asarray(Vstar, dtype=float)
    if Vstar.shape != (dec.m, dec.m):
        raise ValueError(f"V* must be {dec.m} x {dec.m}, got {Vstar.shape}")
    if not is_unitary(Vstar):
        raise NotUnitaryError("V* is not orthogonal to 1e-10")
    K = dec.U @ dec.Sigma_matrix @ Vstar
    return KFactorization(decomposition=dec, Vstar=Vstar, K=K)


@dataclass(frozen=True)
class KernelAnalysis:
    singular_values: np.ndarray
    row_basis: np.ndarray  # m x r
    kernel_basis: np.ndarray  # m x k

    @property
    def basis(self):
        """Row directions followed by kernel directions, as columns."""
        return np.hstack([self.row_basis, self.kernel_basis])


def kernel_analysis(kf: KFactorization) -> KernelAnalysis:
    """Split the right singular vectors of K by zero vs nonzero singular value."""
    _, s, Vt = svd_small(kf.K)
    m = Vt.shape[0]
    full = np.zeros(m)
    full[: s.size] = s
    cutoff = KERNEL_RTOL * (s[0] if s.size else 0.0)
    nonzero = full > cutoff
    return KernelAnalysis(singular_values=s, row_basis=Vt[nonzero].T,
                          kernel_basis=Vt[~nonzero].T)


def lost_information(x, kf: KFactorization, ka: KernelAnalysis):
    """Coordinates of g(x) along the kernel of K."""
    return ka.kernel_basis.T @ kf.g(x)


def nullspace_relaxation_sample(kf: KFactorization, budget: int, tol: float, seed: int = 0):
    """Sampled inputs whose lifting is within ``tol`` of ker K: ||K g(x)|| <= tol ||x||.

    Samples are uniform over the function's domain box; points where f is
    undefined (and the origin) are skipped.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    f = kf.function
    X = uniform_box(np.random.default_rng(seed), f.box_array, budget)
    F, ok = eval_f_batch(f, X)
    ok &= np.linalg.norm(X, axis=1) > 0
    X, F = X[ok], F[ok]
    if X.shape[0] == 0:
        return X
    residual = np.linalg.norm(kf.apply_batch(X, F=F), axis=1)
    return X[residual <= tol * np.linalg.norm(X, axis=1)]


def riesz_representer(kf: KFactorization) -> np.ndarray:
    """For a functional (p = 1), the vector k with f(x) = <k, g(x)>."""
    if kf.K.shape[0] != 1:
        raise ValueError(f"Riesz representer needs p = 1, got p = {kf.K.shape[0]}")
    return kf.K[0].copy()
