import numpy as np
import pytest
from numpy.polynomial import polynomial as P

from unbounded_toeplitz import RationalMatrix, RationalScalar, Realization
from unbounded_toeplitz.examples import load_example


@pytest.fixture(scope="session")
def examples():
    return {k: load_example(k) for k in range(1, 6)}


def scalar_from_poles(poly, terms):
    """``sum poly[j] z^j + sum r / (z - p)^k`` as a RationalScalar plus an oracle.

    The oracle evaluates the pole-sum form directly, independently of the
    coefficient arrays handed to the package.
    """
    num = np.array(poly if len(poly) else [0.0], dtype=complex)
    den = np.array([1.0], dtype=complex)
    for r, p, k in terms:
        fac = P.polypow([-p, 1.0], k)
        num = P.polyadd(P.polymul(num, fac), r * den)
        den = P.polymul(den, fac)

    def oracle(z):
        return sum(c * z ** j for j, c in enumerate(poly)) + sum(
            r / (z - p) ** k for r, p, k in terms)

    # multiple roots of an expanded denominator split by ~sqrt(eps); pass them factored
    fac = (1.0, [(p, k) for _, p, k in terms]) if any(k > 1 for *_, k in terms) else None
    return RationalScalar(num, den, fac), oracle


def random_symbol(rng, m=None):
    """Random m x m symbol with distinct simple or double poles spread over
    the open disc, the circle and the exterior.  Returns the symbol, an
    entrywise oracle and the list of closed-disc poles with multiplicity
    (McMillan degree contribution)."""
    m = m or int(rng.integers(1, 3))
    entries, oracles, closed, used = [], [], [], []
    for i in range(m):
        row, orow = [], []
        for j in range(m):
            poly = list(rng.standard_normal(int(rng.integers(1, 3))))
            terms = []
            for _ in range(int(rng.integers(0, 3))):
                kind = rng.integers(3)
                if kind == 0:
                    p = rng.uniform(0.1, 0.85) * np.exp(2j * np.pi * rng.uniform())
                elif kind == 1:
                    p = np.exp(2j * np.pi * rng.uniform())
                else:
                    p = rng.uniform(1.3, 2.5) * np.exp(2j * np.pi * rng.uniform())
                if any(abs(p - q) < 0.15 or abs(p * np.conj(q) - 1) < 0.15 for q in used):
                    continue
                used.append(p)
                k = 2 if (kind != 2 and rng.uniform() < 0.2) else 1
                r = rng.standard_normal() + 1j * rng.standard_normal()
                r = r / abs(r) * rng.uniform(0.5, 2.0)
                terms.append((r, p, k))
                if kind != 2:
                    closed.append((p, k))
            s, o = scalar_from_poles(poly, terms)
            row.append(s)
            orow.append(o)
        entries.append(tuple(row))
        oracles.append(orow)

    def oracle(z):
        return np.array([[o(z) for o in r] for r in oracles])

    return RationalMatrix(tuple(entries)), oracle, closed


def random_point_away(rng, poles, rmax=2.5, gap=0.05):
    while True:
        z = rmax * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if all(abs(z - p) > gap for p, _ in poles) and all(abs(z * p - 1) > gap for p, _ in poles):
            return complex(z)


def constant_real(R0):
    return Realization(R0=np.atleast_2d(np.asarray(R0, dtype=complex)))


# -- acceptance report -------------------------------------------------------------

import time

ACCEPTANCE_LINES = []
SUITE_BUDGET_S = 60.0


def record_criterion(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_sessionstart(session):
    session.config._t_start = time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    # the runtime budget covers the whole session, so it is judged here
    cfg = session.config
    cfg._t_elapsed = time.perf_counter() - cfg._t_start
    if ACCEPTANCE_LINES and cfg._t_elapsed >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    elapsed = config._t_elapsed
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
    ok = elapsed < SUITE_BUDGET_S
    terminalreporter.write_line(
        f"{'PASS' if ok else 'FAIL'} criterion 6 (suite runtime): "
        f"{elapsed:.1f} s, budget {SUITE_BUDGET_S:.0f} s")
