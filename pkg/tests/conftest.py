import numpy as np
import pytest

from qcqpdual.builtin import example1, example2, example3
from qcqpdual.instance import Constraint, ProblemInstance

# Independent references for Example 3, from bisection on the closed forms
#   psi(s) = 2 [27/(4s+1)^2 + 1/(4s-1)^2 - 26]
#   phi(s) = -1/2 (27/(4s+1) + 1/(4s-1)) - 52 s
# in 40-digit arithmetic (mpmath).
EX3_SIGMA2 = 0.010263239294945757
EX3_SIGMA3 = 0.18985560638938176
EX3_SIGMA4 = 0.30518193922374481
EX3_PHI_SIGMA2 = -12.979923246063117
EX3_PHI_SIGMA4 = -24.213782994526417
# Global primal optimum of Example 3; the brute-force oracle at 2048 points per
# axis returns -24.213782994526422 at (2.33984216, 4.53046782), matching phi(sigma4).
EX3_PRIMAL_OPT = -24.213782994526417


def ex3_psi(s):
    return 2.0 * (27.0 / (4 * s + 1) ** 2 + 1.0 / (4 * s - 1) ** 2 - 26.0)


def ex3_phi(s):
    return -0.5 * (27.0 / (4 * s + 1) + 1.0 / (4 * s - 1)) - 52.0 * s


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def ex2():
    return example2()


@pytest.fixture
def ex3():
    return example3()


def _sym(rng, n, lo=-3.0, hi=3.0):
    M = rng.uniform(lo, hi, size=(n, n))
    return 0.5 * (M + M.T)


def random_instance(rng, n, m):
    """Entries U[-3, 3], symmetrized; each Q_i resampled until well away from singular."""
    A = _sym(rng, n)
    f = rng.uniform(-3, 3, size=n)
    cons = []
    for _ in range(m):
        while True:
            Q = _sym(rng, n)
            w = np.abs(np.linalg.eigvalsh(Q))
            if w.min() > 0.1 * w.max():
                break
        cons.append(Constraint(Q, rng.uniform(-3, 3, size=n), float(rng.uniform(-3, 3))))
    return ProblemInstance(A, f, tuple(cons))


def random_convex_instance(rng, n, m):
    """A > 0, Q_i > 0 and a strictly feasible point by construction."""
    M = rng.uniform(-1, 1, size=(n, n))
    A = M @ M.T + 0.5 * np.eye(n)
    f = rng.uniform(-4, 4, size=n)
    x0 = rng.uniform(-1, 1, size=n)
    cons = []
    for _ in range(m):
        N = rng.uniform(-1, 1, size=(n, n))
        Q = N @ N.T + 0.5 * np.eye(n)
        b = rng.uniform(-1, 1, size=n)
        c = 0.5 * x0 @ Q @ x0 + b @ x0 + rng.uniform(0.5, 3.0)
        cons.append(Constraint(Q, b, float(c)))
    return ProblemInstance(A, f, tuple(cons))


@pytest.fixture(scope="session")
def random_corpus():
    rng = np.random.default_rng(20240601)
    return [
        random_instance(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)))
        for _ in range(200)
    ]


# -- acceptance summary -------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and report.when == "call":
        _CRITERIA[marker.args[0]] = (marker.args[1], report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok = _CRITERIA[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title}")
