import numpy as np
import pytest

from liftsvd.expr import FunctionSpec

# criterion label -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def linear_spec(A, box=(-5.0, 5.0), bounds=None):
    """FunctionSpec for f(x) = A x with exact row-norm bounds unless given."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    p, n = A.shape
    comps = []
    for row in A:
        terms = [f"({float(a)!r})*x{j + 1}" for j, a in enumerate(row)]
        comps.append(" + ".join(terms))
    if bounds is None:
        bounds = np.linalg.norm(A, axis=1)
    return FunctionSpec.from_strings(n, comps, list(bounds), [box] * n, name="linear")


@pytest.fixture
def identity_1d():
    return FunctionSpec.from_strings(1, ["x1"], [1.0], [(-5.0, 5.0)], name="identity")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[0])):
        passed, detail = ACCEPTANCE_RESULTS[label]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
