"""Randomized one-sided matching mechanisms.

All mechanisms return complete :class:`~matchbench.instance.Matching` objects
and take their randomness exclusively from an :class:`~matchbench.rng.RngStream`.
The row-level helpers (``serial_pick``, ``rsd_star_pick``) work on plain lists
and are shared with the pure-Python kernels.
"""

from __future__ import annotations

from .errors import ArgumentError, StructuralError
from .instance import UNASSIGNED, Instance, Matching, complete_lowest_index
from .rng import ORDER_STREAM, RANK_STREAM, RngStream

MECHANISMS = ("rsd", "sd-fixed", "rsd-star", "uniform-max", "ranking")

DEFAULT_ENUMERATION_BUDGET = 10**6


def _check_permutation(order, n):
    order = [int(a) for a in order]
    if sorted(order) != list(range(n)):
        raise ArgumentError(f"order must be a permutation of 0..{n - 1}")
    return order


def serial_pick(rows, order, rng):
    """Serial dictatorship on list-of-lists values.

    Each agent takes an item uniformly from its favorites among the remaining
    items; favorites are collected in ascending item order and a draw is made
    only when there are at least two of them.
    """
    n = len(rows)
    taken = [False] * n
    assignment = [UNASSIGNED] * n
    for a in order:
        row = rows[a]
        best = -1.0
        favorites = []
        for i in range(n):
            if taken[i]:
                continue
            v = row[i]
            if v > best:
                best = v
                favorites = [i]
            elif v == best:
                favorites.append(i)
        if len(favorites) > 1:
            item = favorites[rng.randbelow(len(favorites))]
        else:
            item = favorites[0]
        taken[item] = True
        assignment[a] = item
    return assignment


def sd_fixed_order(inst: Instance, order, rng: RngStream) -> Matching:
    """Serial dictatorship along a given agent order with random tie-breaking."""
    order = _check_permutation(order, inst.n)
    return Matching(serial_pick(inst.rows(), order, rng))


def rsd(inst: Instance, rng: RngStream) -> Matching:
    """Random serial dictatorship: a Fisher-Yates order, then ``sd_fixed_order``."""
    order = rng.permutation(inst.n)
    return Matching(serial_pick(inst.rows(), order, rng))


def ranking(left_ranks, arrivals):
    """RANKING for online bipartite matching.

    ``left_ranks[v]`` is the rank of offline vertex ``v``; ``arrivals`` lists
    the neighbor sets of online vertices in arrival order.  Each arrival is
    matched to its unmatched neighbor of highest rank, if any.  Returns
    ``(arrival index, offline vertex)`` pairs.
    """
    matched = set()
    pairs = []
    for b, neighbors in enumerate(arrivals):
        best = None
        for v in neighbors:
            if v in matched:
                continue
            if best is None or left_ranks[v] > left_ranks[best]:
                best = v
        if best is not None:
            matched.add(best)
            pairs.append((b, best))
    return pairs


def _declared_rows(inst, declarations):
    if declarations is None:
        rows = inst.rows()
    else:
        rows = [[float(v) for v in row] for row in declarations]
        if len(rows) != inst.n or any(len(row) != inst.n for row in rows):
            raise StructuralError("declaration profile does not match the instance size")
    if any(v not in (0.0, 1.0) for row in rows for v in row):
        raise ArgumentError("declarations must be dichotomous")
    return rows


def rsd_star_pick(declared, order, ranks):
    """One run of RSD* for a fixed agent order and item ranking.

    Agents that declare 1 for some unmatched item take the highest-ranked
    such item; the others are discarded and later paired with the leftover
    items in ascending index order.
    """
    n = len(declared)
    taken = [False] * n
    assignment = [UNASSIGNED] * n
    for a in order:
        row = declared[a]
        best = UNASSIGNED
        for i in range(n):
            if not taken[i] and row[i] == 1.0 and (best == UNASSIGNED or ranks[i] > ranks[best]):
                best = i
        if best != UNASSIGNED:
            taken[best] = True
            assignment[a] = best
    return complete_lowest_index(assignment)


def rsd_star(inst: Instance, rng: RngStream, declarations=None) -> Matching:
    """RSD* on a dichotomous instance.

    ``declarations`` defaults to the true values (non-adversarial agents).
    Agent order and item ranks come from two labelled sub-streams of ``rng``.
    """
    if not inst.is_dichotomous:
        raise ArgumentError("rsd_star needs a dichotomous instance")
    declared = _declared_rows(inst, declarations)
    order = rng.substream(ORDER_STREAM).permutation(inst.n)
    ranks = rng.substream(RANK_STREAM).permutation(inst.n)
    return Matching(rsd_star_pick(declared, order, ranks))


def ranking_mechanism(inst: Instance, rng: RngStream, declarations=None) -> Matching:
    """RANKING with items offline under a random ranking and agents arriving in index order."""
    if not inst.is_dichotomous:
        raise ArgumentError("ranking needs a dichotomous instance")
    declared = _declared_rows(inst, declarations)
    ranks = rng.substream(RANK_STREAM).permutation(inst.n)
    arrivals = [[i for i in range(inst.n) if row[i] == 1.0] for row in declared]
    assignment = [UNASSIGNED] * inst.n
    for a, i in ranking(ranks, arrivals):
        assignment[a] = i
    return Matching(complete_lowest_index(assignment))


def uniform_max_matching(inst: Instance, rng: RngStream, declarations=None,
                         budget=DEFAULT_ENUMERATION_BUDGET, enumeration=None) -> Matching:
    """A uniformly random maximum matching of the declared 1-graph.

    Leftover agents and items are paired in ascending index order.  A
    precomputed ``enumeration`` (from
    :func:`matchbench.oracle.enumerate_max_matchings`) skips the enumeration.
    """
    from .oracle import enumerate_max_matchings

    if enumeration is None:
        if not inst.is_dichotomous and declarations is None:
            raise ArgumentError("uniform-max needs dichotomous declarations")
        declared = _declared_rows(inst, declarations)
        enumeration = enumerate_max_matchings(declared, budget=budget)
    chosen = enumeration.matchings[rng.randbelow(enumeration.count)]
    return Matching(complete_lowest_index(chosen))


def run_mechanism(name: str, inst: Instance, rng: RngStream, order=None, declarations=None,
                  enumeration=None) -> Matching:
    """Dispatch on the CLI mechanism identifier."""
    if name == "rsd":
        return rsd(inst, rng)
    if name == "sd-fixed":
        return sd_fixed_order(inst, range(inst.n) if order is None else order, rng)
    if name == "rsd-star":
        return rsd_star(inst, rng, declarations)
    if name == "uniform-max":
        return uniform_max_matching(inst, rng, declarations, enumeration=enumeration)
    if name == "ranking":
        return ranking_mechanism(inst, rng, declarations)
    raise ArgumentError(f"unknown mechanism {name!r}; expected one of {', '.join(MECHANISMS)}")
