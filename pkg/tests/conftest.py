"""Shared fixtures and independent reference implementations for the tests.

The brute-force helpers below deliberately avoid the library's own oracle so
they can be used to check it.
"""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from matchbench.instance import Instance, PreferenceClass

_CRITERIA = []


def brute_optimum(values):
    """Maximum welfare over all n! perfect matchings."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    return max(sum(values[a, p[a]] for a in range(n)) for p in itertools.permutations(range(n)))


def brute_rsd(rows):
    """Exact RSD expected welfare by walking every order and every tie choice."""
    rows = [[Fraction(v) for v in row] for row in rows]
    n = len(rows)

    def walk(order, free):
        if not order:
            return Fraction(0)
        a, rest = order[0], order[1:]
        best = max(rows[a][i] for i in free)
        favs = [i for i in free if rows[a][i] == best]
        return sum(best + walk(rest, free - {i}) for i in favs) / len(favs)

    orders = list(itertools.permutations(range(n)))
    return sum(walk(o, frozenset(range(n))) for o in orders) / len(orders)


def brute_max_matchings(adj, n):
    """All maximum matchings as frozensets of (agent, item) edges."""
    best, found = 0, []
    for k in range(n, -1, -1):
        for agents in itertools.combinations(range(n), k):
            for items in itertools.permutations(range(n), k):
                if all(items[j] in adj[a] for j, a in enumerate(agents)):
                    found.append(frozenset(zip(agents, items)))
        if found:
            best = k
            break
    return best, found


def dich(rows):
    return Instance(np.array(rows, dtype=float), PreferenceClass.DICHOTOMOUS)


def norm(rows):
    return Instance(np.array(rows, dtype=float), PreferenceClass.NORMALIZED)


@pytest.fixture
def tiny():
    return dich([[1, 1], [1, 0]])


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, passed, detail)``."""

    def record(number, passed, detail):
        _CRITERIA.append((number, bool(passed), detail))
        assert passed, f"criterion {number} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
