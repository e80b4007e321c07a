"""Acceptance criteria, one test per criterion.

Each test records ``(passed, detail)`` in ``conftest.ACCEPTANCE_RESULTS`` and
prints a PASS/FAIL line; the terminal summary repeats them in order.
"""

import functools
import math
import time

import numpy as np
import pytest

from liftsvd import certify
from liftsvd.cli import main
from liftsvd.expr import builtin_mimo, builtin_siso, eval_f_batch
from liftsvd.factor import compose_K, random_unitary, riesz_representer, svd_small
from liftsvd.liftcore import (SigmaSpec, compute_S_batch, decompose, delta_batch,
                              delta_oracle_batch, reconstruct_batch, select_sigma,
                              solve_delta_squared_batch, unlift_batch)
from liftsvd.norms import order_components

from conftest import ACCEPTANCE_RESULTS, linear_spec
from test_certify import trivial_lifting_fixture

SQRT_09 = 0.9486832980505138  # sqrt(0.9), frozen from math.sqrt


def record(label, passed, detail):
    passed = bool(passed)
    ACCEPTANCE_RESULTS[label] = (passed, detail)
    print(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
    assert passed, f"{label}: {detail}"


def defined(f, X):
    F, ok = eval_f_batch(f, X)
    return X[ok], F[ok]


# -- sample sets shared with criterion 6 ------------------------------------

@functools.lru_cache(maxsize=None)
def grid_samples():
    """The reconstruction grids: 2001 points (SISO), 201 x 201 (MIMO)."""
    siso, mimo = builtin_siso(), builtin_mimo()
    Xs = np.linspace(-20.0, 20.0, 2001).reshape(-1, 1)
    g = np.linspace(-10.0, 10.0, 201)
    Xm = np.column_stack([a.ravel() for a in np.meshgrid(g, g, indexing="ij")])
    return [(siso, *defined(siso, Xs)), (mimo, *defined(mimo, Xm))]


@functools.lru_cache(maxsize=None)
def oracle_instances(count=1000, seed=2024):
    """Random linear f with n, p <= 6, admissible sigma and x with every f_i(x) != 0."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n, p = rng.integers(1, 7, size=2)
        A = rng.standard_normal((p, n))
        f = linear_spec(A)
        eta = rng.uniform(0.01, 0.9)
        q = order_components(f.norm_bounds)
        base = select_sigma(f.norm_bounds, q, eta, n=int(n))
        sigma = SigmaSpec(tuple(float(s) * rng.uniform(1.0, 3.0) for s in base.sigma),
                          eta, q, int(n))
        x = rng.uniform(-5.0, 5.0, size=(1, n))
        F = x @ A.T
        if np.all(F != 0) and np.any(x != 0):
            out.append((x, F, sigma))
    return out


@functools.lru_cache(maxsize=None)
def certification_samples(samples=10_000, seed=0):
    out = []
    for make in (builtin_siso, builtin_mimo):
        dec = decompose(make())
        X, F = certify.sample_points(dec, samples, seed)
        out.append((dec, X, F))
    return out


# -- criteria ----------------------------------------------------------------

def test_01_reconstruction_fidelity():
    start = time.perf_counter()
    worst = 0.0
    counts = []
    for f, X, F in grid_samples():
        dec = decompose(f)
        rec = reconstruct_batch(dec.lift_batch(X, F=F), dec)
        err = np.linalg.norm(rec - F, axis=1) / np.maximum(1.0, np.linalg.norm(F, axis=1))
        worst = max(worst, float(err.max()))
        counts.append(X.shape[0])
    elapsed = time.perf_counter() - start
    record("1 reconstruction", worst <= 1e-9 and elapsed < 10.0,
           f"max rel err {worst:.3e} <= 1e-9 on {counts} points, {elapsed:.2f}s < 10s")


def test_02_oracle_equivalence():
    instances = oracle_instances()
    start = time.perf_counter()
    worst = 0.0
    for x, F, sigma in instances:
        d = delta_batch(x, F, sigma)
        d_oracle = delta_oracle_batch(x, F, sigma)
        worst = max(worst, float(np.max(np.abs(d - d_oracle) / np.abs(d_oracle))))
    elapsed = time.perf_counter() - start
    record("2 oracle equivalence", worst <= 1e-8 and elapsed < 5.0,
           f"max rel diff {worst:.3e} <= 1e-8 over {len(instances)} instances, "
           f"{elapsed:.2f}s < 5s")


def test_03_norm_preservation_and_injectivity():
    norm_worst, trip_worst = 0.0, 0.0
    for dec, X, F in certification_samples():
        V = dec.lift_batch(X, F=F).V
        xnorm = np.linalg.norm(X, axis=1)
        scale = np.maximum(1.0, xnorm)
        norm_worst = max(norm_worst,
                         float(np.max(np.abs(np.linalg.norm(V, axis=1) - xnorm) / scale)))
        back = unlift_batch(V, (dec.n, dec.p))
        trip_worst = max(trip_worst, float(np.max(np.linalg.norm(back - X, axis=1) / scale)))
    record("3 norm preservation / injectivity", norm_worst <= 1e-12 and trip_worst <= 1e-10,
           f"norm {norm_worst:.3e} <= 1e-12, round trip {trip_worst:.3e} <= 1e-10, "
           f"1e4 samples per builtin")


def test_04_envelope():
    # grid oracle for the pointwise bound |f(x)| <= |x|, i.e. |sin x + cos x^2| / 2 <= 1
    t = np.linspace(-20.0, 20.0, 4_000_001)
    pointwise = float(np.max(np.abs(np.sin(t) + np.cos(t * t)) / 2.0))
    dec, X, F = certification_samples()[0]
    c = certify.certify_envelope(dec, points=X)
    ok = (pointwise <= 1.0 and math.isclose(dec.sigma1, 1 / math.sqrt(0.9), rel_tol=1e-15)
          and c.max_violation <= SQRT_09 + 1e-9)
    record("4 envelope", ok,
           f"sigma_1 {dec.sigma1:.9f}, max ratio {c.max_violation:.9f} <= "
           f"{SQRT_09 + 1e-9:.9f}; grid sup |f|/|x| {pointwise:.9f}")


def test_05_admissibility():
    rng = np.random.default_rng(5)
    worst, descending = 0.0, True
    for _ in range(100):
        p = int(rng.integers(1, 9))
        bounds = rng.exponential(1.0, size=p) * 10.0 ** rng.uniform(-3, 3)
        eta = float(rng.uniform(0.01, 0.99))
        q = order_components(bounds)
        s = select_sigma(bounds, q, eta, n=1)
        ranked = q.apply(bounds)
        total = float(np.sum((ranked / s.array) ** 2))
        worst = max(worst, abs(total - (1.0 - eta)))
        descending &= bool(np.all(np.diff(s.array) <= 0))
    record("5 sigma admissibility", worst <= 1e-12 and descending,
           f"max |sum - (1-eta)| {worst:.3e} <= 1e-12, descending {descending}, 100 vectors")


def test_06_gamma_sign_and_positivity():
    max_gamma, min_sq, checked = -np.inf, np.inf, 0

    def visit(X, F, sigma):
        nonlocal max_gamma, min_sq, checked
        nz = np.linalg.norm(X, axis=1) > 0
        X, F = X[nz], F[nz]
        _, gamma = compute_S_batch(X, F, sigma)
        max_gamma = max(max_gamma, float(gamma.max()))
        full = np.all(F != 0, axis=1)
        if np.any(full):
            min_sq = min(min_sq, float(solve_delta_squared_batch(X[full], F[full], sigma).min()))
        checked += X.shape[0]

    for f, X, F in grid_samples():
        visit(X, F, decompose(f).sigma_spec)
    for x, F, sigma in oracle_instances():
        visit(x, F, sigma)
    for dec, X, F in certification_samples():
        visit(X, F, dec.sigma_spec)
    record("6 gamma sign / delta^2 positivity", max_gamma < 0 and min_sq >= -1e-14,
           f"max gamma {max_gamma:.6f} < 0, min delta^2 {min_sq:.3e} >= -1e-14 "
           f"over {checked} points")


def test_07_kg_invariance():
    worst_f, worst_s = 0.0, 0.0
    for make in (builtin_siso, builtin_mimo):
        f = make()
        dec = decompose(f)
        X, F = defined(f, certify.sample_points(dec, 1000, 7)[0])
        for seed in range(10):
            kf = compose_K(dec, random_unitary(dec.m, seed))
            err = np.linalg.norm(kf.apply_batch(X, F=F) - F, axis=1)
            worst_f = max(worst_f, float(np.max(err / np.maximum(1.0, np.linalg.norm(F, axis=1)))))
            _, s, _ = svd_small(kf.K)
            worst_s = max(worst_s, float(np.max(np.abs(s - dec.sigma_spec.array)
                                                / dec.sigma_spec.array)))
    record("7 K o g invariance", worst_f <= 1e-9 and worst_s <= 1e-10,
           f"K g vs f {worst_f:.3e} <= 1e-9, svd sigma {worst_s:.3e} <= 1e-10, 10 V*")


def test_08_riesz():
    worst = 0.0
    for make in (builtin_siso, builtin_mimo):
        f = make()
        dec = decompose(f)
        X, F = defined(f, certify.sample_points(dec, 1000, 8)[0])
        kf = compose_K(dec, random_unitary(dec.m, 99))
        k = riesz_representer(kf)
        worst = max(worst, float(np.max(np.abs(kf.g_batch(X, F=F) @ k - F[:, 0]))))
    record("8 Riesz representer", worst <= 1e-9,
           f"max |<k, g(x)> - f(x)| {worst:.3e} <= 1e-9, 1e3 samples per builtin")


def test_09_trivial_lifting_fails():
    dec, lifting = trivial_lifting_fixture(builtin_siso())
    c = certify.certify_norm_preservation(dec, 10_000, seed=0, lifting=lifting)
    record("9 negative control", not c.passed,
           f"v := f fails norm preservation (violation {c.max_violation:.3f} > 1e-12)")


@pytest.mark.parametrize("builtin", ["siso", "mimo"])
def test_10_determinism(tmp_path, builtin):
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [main(["certify", "--builtin", builtin, "--seed", "42", "--out", str(d)])
             for d in (a, b)]
    same = (a / "certificates.json").read_bytes() == (b / "certificates.json").read_bytes()
    label = "10 determinism"
    prev = ACCEPTANCE_RESULTS.get(label, (True, ""))
    detail = (prev[1] + "; " if prev[1] else "") + f"{builtin}: exit {codes}, identical {same}"
    record(label, prev[0] and same and codes == [0, 0], detail)
