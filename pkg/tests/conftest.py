import pytest

from tw_edgeworth import limits

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)


@pytest.fixture
def acceptance_line(request):
    """Record one pass/fail line for the terminal summary and print it."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[ACCEPTANCE].append(line)

    return record


@pytest.fixture(scope="session")
def tables():
    """Limit tables on the default grid, shared by the slower tests."""
    return limits.build_tables()


AB_NS = (40, 60, 80, 120, 160, 240, 320, 400)


@pytest.fixture(scope="session")
def ab_values():
    """(ns, a, b) at t = tau(n, c, s) for the scaled-identity regressions, cached per (s, c)."""
    import numpy as np

    from tw_edgeworth import finite_n

    cache = {}

    def get(s: float, c: float):
        if (s, c) not in cache:
            ab = np.array([finite_n.ab_integrals(n, c, float(finite_n.tau(n, c, s))) for n in AB_NS])
            cache[s, c] = (np.array(AB_NS), ab[:, 0], ab[:, 1])
        return cache[s, c]

    return get
