"""Brute-force ground truth for small instances.

Expected welfare and allocations of serial dictatorship mechanisms by
recursion over (remaining agents, remaining items) bitmask states,
enumeration and counting of maximum matchings, and exhaustive truthfulness
and symmetry checks.

Dichotomous instances are evaluated with :class:`fractions.Fraction`
arithmetic up to ``EXACT_MAX_N`` agents; beyond that, and for normalized
values, probabilities are accumulated in floating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import ArgumentError, ResourceLimitError, StructuralError
from .instance import UNASSIGNED, Instance, complete_lowest_index
from .mechanisms import DEFAULT_ENUMERATION_BUDGET
from .optimal import hopcroft_karp

DEFAULT_MAX_N = 12
DEVIATION_MAX_N = 10
TRUTHFUL_MAX_N = 5
EXACT_MAX_N = 8
COMPARE_SLACK = 1e-12

ORACLE_MECHANISMS = ("rsd", "uniform-max", "rsd-star")


@dataclass(frozen=True)
class ExpectedAllocation:
    """Probability that each agent receives each item, with expected true values.

    ``exact_values`` keeps the unrounded per-agent values (``Fraction`` when
    the computation was exact) for comparisons.
    """

    probs: np.ndarray
    expected_values: np.ndarray
    exact_values: tuple

    @property
    def welfare(self) -> float:
        return float(sum(self.exact_values))


@dataclass(frozen=True)
class MaxMatchings:
    size: int
    matchings: list

    @property
    def count(self) -> int:
        return len(self.matchings)


@dataclass(frozen=True)
class TruthfulnessReport:
    mechanism: str
    max_gain: float
    worst_agent: int
    worst_row: tuple
    deviations_checked: int
    exhaustive: bool

    @property
    def truthful(self) -> bool:
        return self.max_gain <= COMPARE_SLACK


@dataclass(frozen=True)
class SymmetryReport:
    mechanism: str
    max_difference: float
    pairs_checked: int

    @property
    def symmetric(self) -> bool:
        return self.max_difference <= COMPARE_SLACK


def _use_exact(inst, exact):
    if exact is None:
        return inst.is_dichotomous and inst.n <= EXACT_MAX_N
    return exact


def _guard(n, max_n, what):
    if n > max_n:
        raise ResourceLimitError(f"{what} is limited to n <= {max_n}, got n = {n}")


def _bits(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _favorites(row, items):
    best = None
    favs = []
    for i in items:
        v = row[i]
        if best is None or v > best:
            best = v
            favs = [i]
        elif v == best:
            favs.append(i)
    return favs


def _numeric_rows(rows, exact):
    if exact:
        return [[Fraction(v) for v in row] for row in rows]
    return [list(map(float, row)) for row in rows]


def _to_float_matrix(mat):
    return np.array([[float(x) for x in row] for row in mat], dtype=np.float64)


def _allocation(true_rows, probs):
    n = len(true_rows)
    exact_values = tuple(sum((true_rows[a][i] * probs[a][i] for i in range(n)), probs[a][0] * 0)
                         for a in range(n))
    return ExpectedAllocation(
        probs=_to_float_matrix(probs),
        expected_values=np.array([float(v) for v in exact_values]),
        exact_values=exact_values,
    )


def _declared_profile(inst, declarations):
    rows = inst.rows() if declarations is None else [list(map(float, r)) for r in declarations]
    if len(rows) != inst.n or any(len(r) != inst.n for r in rows):
        raise StructuralError("declaration profile does not match the instance size")
    return rows


# --- RSD ----------------------------------------------------------------------


def exact_rsd_welfare(inst: Instance, max_n=DEFAULT_MAX_N, exact=None) -> float:
    """Expected RSD welfare by memoized recursion over remaining agents and items.

    E(A', I') averages, over the agent drawn from A' and over its favorite
    items in I', the picked value plus E of the reduced state.
    """
    return float(_rsd_welfare_value(inst, max_n, exact))


def _rsd_welfare_value(inst, max_n=DEFAULT_MAX_N, exact=None):
    n = inst.n
    _guard(n, max_n, "exact RSD welfare")
    exact = _use_exact(inst, exact)
    rows = _numeric_rows(inst.rows(), exact)
    zero = Fraction(0) if exact else 0.0
    memo = {}

    def value(amask, imask):
        if amask == 0:
            return zero
        key = (amask, imask)
        hit = memo.get(key)
        if hit is not None:
            return hit
        agents = _bits(amask)
        items = _bits(imask)
        total = zero
        for a in agents:
            row = rows[a]
            favs = _favorites(row, items)
            inner = zero
            for i in favs:
                inner += row[i] + value(amask & ~(1 << a), imask & ~(1 << i))
            total += inner / len(favs)
        result = total / len(agents)
        memo[key] = result
        return result

    full = (1 << n) - 1
    return value(full, full)


def rsd_allocation(inst: Instance, declarations=None, max_n=DEFAULT_MAX_N, exact=None) -> ExpectedAllocation:
    """Exact RSD allocation when agents choose by ``declarations``.

    Probability mass is pushed forward through the reachable states; the
    expected values are measured with the instance's true values.
    """
    n = inst.n
    _guard(n, max_n, "exact RSD allocation")
    exact = _use_exact(inst, exact)
    true_rows = _numeric_rows(inst.rows(), exact)
    declared = _numeric_rows(_declared_profile(inst, declarations), exact)
    zero = Fraction(0) if exact else 0.0
    probs = [[zero] * n for _ in range(n)]
    full = (1 << n) - 1
    level = {(full, full): Fraction(1) if exact else 1.0}
    for _ in range(n):
        nxt = {}
        for (amask, imask), mass in level.items():
            agents = _bits(amask)
            items = _bits(imask)
            per_agent = mass / len(agents)
            for a in agents:
                favs = _favorites(declared[a], items)
                share = per_agent / len(favs)
                for i in favs:
                    probs[a][i] += share
                    key = (amask & ~(1 << a), imask & ~(1 << i))
                    nxt[key] = nxt.get(key, zero) + share
        level = nxt
    return _allocation(true_rows, probs)


def exact_deviation_value(inst: Instance, agent: int, declared_row, max_n=DEVIATION_MAX_N) -> float:
    """Expected true value to ``agent`` under RSD when it alone picks by ``declared_row``."""
    _guard(inst.n, max_n, "deviation value")
    if not 0 <= agent < inst.n or len(declared_row) != inst.n:
        raise StructuralError("agent index or declared row does not fit the instance")
    declarations = inst.rows()
    declarations[agent] = [float(v) for v in declared_row]
    return float(rsd_allocation(inst, declarations, max_n=max_n).exact_values[agent])


def rsd_outcomes(inst: Instance, max_n=6):
    """Every RSD outcome with its probability, without memoization.

    Walks all ``n!`` agent orders and, inside each, every tie-breaking branch.
    Yields ``(probability, assignment)``; probabilities are Fractions.
    """
    n = inst.n
    _guard(n, max_n, "RSD outcome enumeration")
    rows = inst.rows()
    p_order = Fraction(1, factorial(n))

    def branches(order, pos, remaining, assignment, prob):
        if pos == n:
            yield prob, tuple(assignment)
            return
        a = order[pos]
        favs = _favorites(rows[a], sorted(remaining))
        for i in favs:
            assignment[a] = i
            yield from branches(order, pos + 1, remaining - {i}, assignment, prob / len(favs))
        assignment[a] = UNASSIGNED

    for order in itertools.permutations(range(n)):
        yield from branches(order, 0, frozenset(range(n)), [UNASSIGNED] * n, p_order)


def enumerated_rsd_welfare(inst: Instance, max_n=6) -> float:
    """Expected RSD welfare summed over :func:`rsd_outcomes`."""
    exact = _use_exact(inst, None)
    rows = _numeric_rows(inst.rows(), exact)
    total = Fraction(0) if exact else 0.0
    for prob, assignment in rsd_outcomes(inst, max_n=max_n):
        w = sum((rows[a][i] for a, i in enumerate(assignment)), rows[0][0] * 0)
        total += (prob if exact else float(prob)) * w
    return float(total)


# --- maximum matchings --------------------------------------------------------


def _adjacency(graph):
    if isinstance(graph, Instance):
        if not graph.is_dichotomous:
            raise ArgumentError("maximum matchings are defined on dichotomous graphs")
        rows = graph.rows()
    else:
        rows = [list(r) for r in np.asarray(graph, dtype=np.float64).tolist()]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise StructuralError("graph must be a square 0/1 matrix")
    if any(v not in (0.0, 1.0) for r in rows for v in r):
        raise ArgumentError("graph entries must be 0 or 1")
    return [[i for i in range(n) if r[i] == 1.0] for r in rows]


def enumerate_max_matchings(graph, budget=DEFAULT_ENUMERATION_BUDGET) -> MaxMatchings:
    """All maximum-cardinality matchings of a 0/1 bipartite graph.

    Backtracks over agents in index order, letting at most ``n - size``
    agents stay unmatched.  Each matching is a tuple ``assignment[a]`` with
    ``UNASSIGNED`` for agents left out.  Raises ``ResourceLimitError`` once
    more than ``budget`` matchings are found.
    """
    adj = _adjacency(graph)
    n = len(adj)
    size, _ = hopcroft_karp(adj, n)
    slack = n - size
    found = []
    assignment = [UNASSIGNED] * n
    used = [False] * n

    def walk(a, skipped):
        if a == n:
            found.append(tuple(assignment))
            if len(found) > budget:
                raise ResourceLimitError(f"more than {budget} maximum matchings")
            return
        for i in adj[a]:
            if not used[i]:
                used[i] = True
                assignment[a] = i
                walk(a + 1, skipped)
                used[i] = False
                assignment[a] = UNASSIGNED
        if skipped < slack:
            walk(a + 1, skipped + 1)

    walk(0, 0)
    return MaxMatchings(size, found)


def count_matchings_through_edge(graph, agent: int, item: int, budget=DEFAULT_ENUMERATION_BUDGET) -> int:
    """Number of maximum matchings that contain the edge ``(agent, item)``."""
    result = enumerate_max_matchings(graph, budget=budget)
    return sum(1 for m in result.matchings if m[agent] == item)


def matched_one_count(graph, agent: int, budget=DEFAULT_ENUMERATION_BUDGET) -> int:
    """Number of maximum matchings giving ``agent`` one of its 1-edges."""
    result = enumerate_max_matchings(graph, budget=budget)
    return sum(1 for m in result.matchings if m[agent] != UNASSIGNED)


def uniform_max_allocation(inst: Instance, declarations=None, budget=DEFAULT_ENUMERATION_BUDGET) -> ExpectedAllocation:
    """Exact allocation of the uniform-random-maximum-matching mechanism."""
    declared = _declared_profile(inst, declarations)
    if not inst.is_dichotomous:
        raise ArgumentError("uniform-max is only defined for dichotomous instances")
    result = enumerate_max_matchings(declared, budget=budget)
    n = inst.n
    weight = Fraction(1, result.count)
    probs = [[Fraction(0)] * n for _ in range(n)]
    for m in result.matchings:
        for a, i in enumerate(complete_lowest_index(m)):
            probs[a][i] += weight
    return _allocation(_numeric_rows(inst.rows(), True), probs)


# --- RSD* ---------------------------------------------------------------------


def rsd_star_allocation(inst: Instance, declarations=None, max_n=TRUTHFUL_MAX_N) -> ExpectedAllocation:
    """Exact RSD* allocation, averaging over every item ranking.

    For a fixed ranking the only randomness left is the agent order, handled
    by pushing mass through (remaining agents, remaining items, discarded
    agents) states.
    """
    if not inst.is_dichotomous:
        raise ArgumentError("rsd-star is only defined for dichotomous instances")
    n = inst.n
    _guard(n, max_n, "exact RSD* allocation")
    declared = _declared_profile(inst, declarations)
    if any(v not in (0.0, 1.0) for r in declared for v in r):
        raise ArgumentError("rsd-star declarations must be dichotomous")
    probs = [[Fraction(0)] * n for _ in range(n)]
    full = (1 << n) - 1
    p_rank = Fraction(1, factorial(n))
    for ranks in itertools.permutations(range(n)):
        level = {(full, full, 0, ()): p_rank}
        for _ in range(n):
            nxt = {}
            for (amask, imask, discarded, picks), mass in level.items():
                agents = _bits(amask)
                share = mass / len(agents)
                for a in agents:
                    best = UNASSIGNED
                    for i in _bits(imask):
                        if declared[a][i] == 1.0 and (best == UNASSIGNED or ranks[i] > ranks[best]):
                            best = i
                    if best == UNASSIGNED:
                        key = (amask & ~(1 << a), imask, discarded | (1 << a), picks)
                    else:
                        key = (amask & ~(1 << a), imask & ~(1 << best), discarded,
                               tuple(sorted(picks + ((a, best),))))
                    nxt[key] = nxt.get(key, Fraction(0)) + share
            level = nxt
        for (_, _, _, picks), mass in level.items():
            assignment = [UNASSIGNED] * n
            for a, i in picks:
                assignment[a] = i
            for a, i in enumerate(complete_lowest_index(assignment)):
                probs[a][i] += mass
    return _allocation(_numeric_rows(inst.rows(), True), probs)


# --- truthfulness and symmetry --------------------------------------------------


def mechanism_allocation(inst: Instance, mechanism: str, declarations=None) -> ExpectedAllocation:
    if mechanism == "rsd":
        return rsd_allocation(inst, declarations, max_n=DEVIATION_MAX_N)
    if mechanism == "uniform-max":
        return uniform_max_allocation(inst, declarations)
    if mechanism == "rsd-star":
        return rsd_star_allocation(inst, declarations)
    raise ArgumentError(f"no exact oracle for mechanism {mechanism!r}")


def _deviation_rows(row, dichotomous):
    n = len(row)
    rows = [tuple(float(b) for b in bits) for bits in itertools.product((0, 1), repeat=n)]
    if not dichotomous:
        rows.extend(sorted(set(itertools.permutations(row))))
    seen = set()
    unique = []
    for r in rows:
        if r not in seen:
            seen.add(r)
            unique.append(r)
    return unique


def check_truthfulness(inst: Instance, mechanism: str, max_n=TRUTHFUL_MAX_N) -> TruthfulnessReport:
    """Largest gain any single agent obtains by misreporting.

    Dichotomous instances are checked against all ``2**n`` declared rows per
    agent.  Normalized instances (RSD only) are checked against every
    dichotomous row and every permutation of the agent's own row; that
    report is marked non-exhaustive.
    """
    if mechanism not in ORACLE_MECHANISMS:
        raise ArgumentError(f"no truthfulness oracle for mechanism {mechanism!r}")
    if mechanism != "rsd" and not inst.is_dichotomous:
        raise ArgumentError(f"{mechanism} is only defined for dichotomous instances")
    _guard(inst.n, max_n, "truthfulness check")
    truthful = mechanism_allocation(inst, mechanism).exact_values
    rows = inst.rows()
    max_gain = None
    worst = (0, tuple(rows[0]))
    checked = 0
    for a in range(inst.n):
        for dev in _deviation_rows(rows[a], inst.is_dichotomous):
            if list(dev) == rows[a]:
                continue
            declarations = [list(r) for r in rows]
            declarations[a] = list(dev)
            value = mechanism_allocation(inst, mechanism, declarations).exact_values[a]
            gain = float(value - truthful[a])
            checked += 1
            if max_gain is None or gain > max_gain:
                max_gain = gain
                worst = (a, dev)
    return TruthfulnessReport(
        mechanism=mechanism,
        max_gain=0.0 if max_gain is None else max_gain,
        worst_agent=worst[0],
        worst_row=tuple(worst[1]),
        deviations_checked=checked,
        exhaustive=inst.is_dichotomous,
    )


def check_symmetry(inst: Instance, mechanism: str) -> SymmetryReport:
    """Largest expected-value gap between two agents with identical rows."""
    if mechanism not in ORACLE_MECHANISMS:
        raise ArgumentError(f"no symmetry oracle for mechanism {mechanism!r}")
    if mechanism != "rsd" and not inst.is_dichotomous:
        raise ArgumentError(f"{mechanism} is only defined for dichotomous instances")
    values = mechanism_allocation(inst, mechanism).exact_values
    rows = inst.rows()
    worst = 0.0
    pairs = 0
    for a, b in itertools.combinations(range(inst.n), 2):
        if rows[a] == rows[b]:
            pairs += 1
            worst = max(worst, abs(float(values[a] - values[b])))
    return SymmetryReport(mechanism, worst, pairs)
