"""Maximum social welfare: weighted assignment and maximum cardinality matching."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .instance import UNASSIGNED, Instance, Matching, complete_lowest_index, social_welfare

REDUCED_COST_TOL = 1e-12


@dataclass(frozen=True)
class OptimalResult:
    matching: Matching
    value: float


def _hungarian(cost):
    """Minimum-cost perfect assignment by shortest augmenting paths with potentials.

    Returns ``row_of_col`` with ``row_of_col[j]`` the row assigned to column j.
    Ties are resolved toward the lowest column index (``argmin`` returns the
    first minimum and updates need a strict improvement).
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for row in range(1, n + 1):
        p[0] = row
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:] - REDUCED_COST_TOL)
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    return p[1:] - 1


def max_weight_matching(inst: Instance) -> OptimalResult:
    """Welfare-maximizing complete matching in O(n^3).

    The reported value is recomputed from the returned matching against the
    raw values, not read off the dual potentials.
    """
    row_of_col = _hungarian(-inst.values)
    assignment = [UNASSIGNED] * inst.n
    for col, row in enumerate(row_of_col):
        assignment[int(row)] = col
    matching = Matching(assignment)
    return OptimalResult(matching, social_welfare(inst, matching))


def hopcroft_karp(adj, n_right=None):
    """Maximum cardinality matching of a bipartite graph.

    ``adj[a]`` lists the right vertices adjacent to left vertex ``a``.
    Returns ``(size, match_left)`` with ``match_left[a]`` the partner of ``a``
    or ``UNASSIGNED``.
    """
    n_left = len(adj)
    if n_right is None:
        n_right = max((max(nbrs) for nbrs in adj if nbrs), default=-1) + 1
    match_left = [UNASSIGNED] * n_left
    match_right = [UNASSIGNED] * n_right
    inf = n_left + 1
    dist = [inf] * n_left

    def bfs():
        queue = deque()
        for a in range(n_left):
            if match_left[a] == UNASSIGNED:
                dist[a] = 0
                queue.append(a)
            else:
                dist[a] = inf
        found = inf
        while queue:
            a = queue.popleft()
            if dist[a] >= found:
                continue
            for i in adj[a]:
                b = match_right[i]
                if b == UNASSIGNED:
                    found = min(found, dist[a] + 1)
                elif dist[b] == inf:
                    dist[b] = dist[a] + 1
                    queue.append(b)
        return found != inf

    def dfs(a):
        # explicit stack: (vertex, next neighbor position)
        stack = [(a, 0)]
        path = []
        while stack:
            x, pos = stack[-1]
            nbrs = adj[x]
            advanced = False
            while pos < len(nbrs):
                i = nbrs[pos]
                pos += 1
                b = match_right[i]
                if b == UNASSIGNED:
                    path.append((x, i))
                    for px, pi in path:
                        match_left[px] = pi
                        match_right[pi] = px
                    return True
                elif dist[b] == dist[x] + 1:
                    stack[-1] = (x, pos)
                    path.append((x, i))
                    stack.append((b, 0))
                    advanced = True
                    break
            if not advanced:
                dist[x] = inf
                stack.pop()
                if path:
                    path.pop()
        return False

    size = 0
    while bfs():
        for a in range(n_left):
            if match_left[a] == UNASSIGNED and dfs(a):
                size += 1
    return size, match_left


def max_cardinality_matching(inst: Instance) -> OptimalResult:
    """Optimum of a dichotomous instance via Hopcroft-Karp on its 1-graph.

    The maximum matching is completed with lowest-index pairing, which only
    adds 0-valued pairs.
    """
    if not inst.is_dichotomous:
        raise ArgumentError("max_cardinality_matching needs a dichotomous instance")
    _, match_left = hopcroft_karp(inst.one_graph(), inst.n)
    matching = Matching(complete_lowest_index(match_left))
    return OptimalResult(matching, social_welfare(inst, matching))


def optimal_value(inst: Instance) -> float:
    """nu(O), taking the cardinality route for dichotomous instances."""
    if inst.is_dichotomous:
        return max_cardinality_matching(inst).value
    return max_weight_matching(inst).value
