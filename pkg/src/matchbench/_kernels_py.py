"""Pure-Python Monte Carlo kernels.

Reference implementation of the compiled ``_kernels`` extension, used when
the extension is not built.  Both produce bitwise identical per-trial
welfare arrays for the same arguments.
"""

import numpy as np

from .instance import UNASSIGNED
from .mechanisms import rsd_star_pick, serial_pick
from .rng import ORDER_STREAM, RANK_STREAM, trial_stream

BACKEND = "python"


def _welfare(rows, assignment):
    total = 0.0
    for a, i in enumerate(assignment):
        total += rows[a][i]
    return total


def rsd_welfare(values, seed, start, stop):
    """Welfare of RSD trials ``start .. stop-1``."""
    rows = np.ascontiguousarray(values, dtype=np.float64).tolist()
    n = len(rows)
    out = np.empty(stop - start)
    for t in range(start, stop):
        rng = trial_stream(seed, t)
        order = rng.permutation(n)
        out[t - start] = _welfare(rows, serial_pick(rows, order, rng))
    return out


def rsd_star_welfare(values, declared, seed, start, stop):
    """Welfare (under ``values``) of RSD* trials where agents report ``declared``."""
    rows = np.ascontiguousarray(values, dtype=np.float64).tolist()
    decl = np.ascontiguousarray(declared, dtype=np.float64).tolist()
    n = len(rows)
    out = np.empty(stop - start)
    for t in range(start, stop):
        rng = trial_stream(seed, t)
        order = rng.substream(ORDER_STREAM).permutation(n)
        ranks = rng.substream(RANK_STREAM).permutation(n)
        out[t - start] = _welfare(rows, rsd_star_pick(decl, order, ranks))
    return out


def _fact_trial(k, z, rng):
    n = k + z
    half = k // 2
    band_lo = half - 1
    agent_pos = rng.sorted_sample(n, k)
    item_pos = rng.sorted_sample(n, k)
    agents = rng.permutation(k)
    items = rng.permutation(k)
    # irrelevant items that precede the j-th relevant item in the random-pick order
    before = [item_pos[j] - j for j in range(k)]

    alive = [True] * k
    band = list(range(band_lo, k))
    band_slot = [UNASSIGNED] * k
    for slot, item in enumerate(band):
        band_slot[item] = slot
    state = {"used": 0, "next": 0}

    def kill(item):
        alive[item] = False
        slot = band_slot[item]
        if slot != UNASSIGNED:
            last = band.pop()
            if last != item:
                band[slot] = last
                band_slot[last] = slot
            band_slot[item] = UNASSIGNED

    def random_picks(count):
        # uniform picks without replacement = walking a uniformly random item order
        used = state["used"]
        j = state["next"]
        while count > 0:
            while j < k and not alive[items[j]]:
                j += 1
            if j == k:
                used += count
                break
            avail = before[j] - used
            if count <= avail:
                used += count
                break
            used += avail
            count -= avail + 1
            kill(items[j])
        state["used"] = used
        state["next"] = j

    welfare = 0
    prev = -1
    for t in range(k):
        random_picks(agent_pos[t] - prev - 1)
        prev = agent_pos[t]
        a = agents[t]
        if a < half:
            own = 1 if (a < band_lo and alive[a]) else 0
            size = len(band) + own
            if size:
                r = rng.randbelow(size) if size > 1 else 0
                kill(band[r] if r < len(band) else a)
                welfare += 1
                continue
        elif alive[a]:
            kill(a)
            welfare += 1
            continue
        random_picks(1)
    return float(welfare)


def fact_welfare(k, z, seed, start, stop):
    """RSD welfare on the Fact instance without materializing the matrix.

    Only the ``k`` agents and items with nonzero values are tracked.  The
    other agents and every agent without a 1-valued item left pick uniformly
    from the remaining items, which is simulated as walking a uniformly random
    item order: only the positions of the ``k`` relevant items in that order
    and in the agent order need sampling.
    """
    out = np.empty(stop - start)
    for t in range(start, stop):
        out[t - start] = _fact_trial(k, z, trial_stream(seed, t))
    return out


def stream_head(seed, count):
    """First ``count`` words of ``RngStream(seed)``; used to cross-check backends."""
    from .rng import RngStream

    rng = RngStream(seed)
    return np.array([rng.next_u64() for _ in range(count)], dtype=np.uint64)
