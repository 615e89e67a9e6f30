import functools

import pytest

from kylefee import MarketParams, make_uniform_grid, solve_equilibrium

ACCEPTANCE_LINES = []

KAPPAS = (0.025, 0.035, 0.045, 0.07, 0.09)


@pytest.fixture(scope="session")
def base():
    return MarketParams()


@pytest.fixture(scope="session")
def grid(base):
    return make_uniform_grid(base, 1000)


@functools.lru_cache(maxsize=None)
def _profile(kappa, iter_limit, n):
    p = MarketParams(kappa=kappa)
    return solve_equilibrium(p, make_uniform_grid(p, n), iter_limit=iter_limit)


@pytest.fixture(scope="session")
def profile():
    """``profile(kappa, iter_limit=None, n=1000)``, cached across the session."""
    def get(kappa, iter_limit=None, n=1000):
        return _profile(float(kappa), iter_limit, n)
    return get


def record_acceptance(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
