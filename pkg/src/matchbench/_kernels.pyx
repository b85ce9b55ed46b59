# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo kernels.

Same contracts and random-draw sequence as ``_kernels_py``; the loops run
without the GIL so chunks can be evaluated on several threads.
"""

import numpy as np

from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free, qsort
from libc.string cimport memmove

BACKEND = "cython"

cdef uint64_t GOLDEN_GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t ORDER_STREAM = 1
cdef uint64_t RANK_STREAM = 2


cdef struct Xoshiro:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t derive(uint64_t seed, uint64_t label) noexcept nogil:
    cdef uint64_t base = mix64(seed)
    return mix64(base + (label + 1) * <uint64_t>GOLDEN_GAMMA)


cdef inline void seed_stream(Xoshiro* st, uint64_t seed) noexcept nogil:
    cdef uint64_t x = seed
    x += <uint64_t>GOLDEN_GAMMA
    st.s0 = mix64(x)
    x += <uint64_t>GOLDEN_GAMMA
    st.s1 = mix64(x)
    x += <uint64_t>GOLDEN_GAMMA
    st.s2 = mix64(x)
    x += <uint64_t>GOLDEN_GAMMA
    st.s3 = mix64(x)


cdef inline uint64_t rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t next_u64(Xoshiro* st) noexcept nogil:
    cdef uint64_t result = rotl(st.s1 * 5, 7) * 9
    cdef uint64_t t = st.s1 << 17
    st.s2 ^= st.s0
    st.s3 ^= st.s1
    st.s1 ^= st.s2
    st.s0 ^= st.s3
    st.s2 ^= t
    st.s3 = rotl(st.s3, 45)
    return result


cdef inline uint64_t randbelow(Xoshiro* st, uint64_t m) noexcept nogil:
    cdef uint64_t threshold = (<uint64_t>0 - m) % m
    cdef uint64_t x
    while True:
        x = next_u64(st)
        if x >= threshold:
            return x % m


cdef inline void shuffle(Xoshiro* st, int64_t* arr, int64_t n) noexcept nogil:
    cdef int64_t i, j, tmp
    for i in range(n):
        arr[i] = i
    i = n - 1
    while i > 0:
        j = <int64_t>randbelow(st, <uint64_t>(i + 1))
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp
        i -= 1


cdef int cmp_i64(const void* a, const void* b) noexcept nogil:
    cdef int64_t x = (<int64_t*>a)[0]
    cdef int64_t y = (<int64_t*>b)[0]
    return (x > y) - (x < y)


cdef void sorted_sample(Xoshiro* st, int64_t population, int64_t k, int64_t* out) noexcept nogil:
    # first k distinct draws of randbelow(population), sorted
    cdef int64_t i, m, v, lo, hi, mid
    if k == 0:
        return
    for i in range(k):
        out[i] = <int64_t>randbelow(st, <uint64_t>population)
    qsort(out, k, sizeof(int64_t), cmp_i64)
    m = 1
    for i in range(1, k):
        if out[i] != out[m - 1]:
            out[m] = out[i]
            m += 1
    while m < k:
        v = <int64_t>randbelow(st, <uint64_t>population)
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) >> 1
            if out[mid] < v:
                lo = mid + 1
            else:
                hi = mid
        if lo < m and out[lo] == v:
            continue
        memmove(&out[lo + 1], &out[lo], (m - lo) * sizeof(int64_t))
        out[lo] = v
        m += 1


def stream_head(uint64_t seed, Py_ssize_t count):
    cdef Xoshiro st
    seed_stream(&st, seed)
    out = np.empty(count, dtype=np.uint64)
    cdef uint64_t[::1] view = out
    cdef Py_ssize_t i
    for i in range(count):
        view[i] = next_u64(&st)
    return out


def derive_seed(uint64_t seed, uint64_t label):
    return derive(seed, label)


# --- RSD ----------------------------------------------------------------------

def rsd_welfare(values, uint64_t seed, int64_t start, int64_t stop):
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef int64_t n = v.shape[0]
    out = np.empty(stop - start, dtype=np.float64)
    cdef double[::1] res = out
    cdef int64_t* order = <int64_t*>malloc(max(n, 1) * sizeof(int64_t))
    cdef int64_t* favs = <int64_t*>malloc(max(n, 1) * sizeof(int64_t))
    cdef int64_t* assign = <int64_t*>malloc(max(n, 1) * sizeof(int64_t))
    cdef char* taken = <char*>malloc(max(n, 1))
    cdef Xoshiro st
    cdef int64_t t, p, a, i, nf, item
    cdef double best, x, w
    if order == NULL or favs == NULL or assign == NULL or taken == NULL:
        free(order); free(favs); free(assign); free(taken)
        raise MemoryError()
    try:
        with nogil:
            for t in range(start, stop):
                seed_stream(&st, derive(seed, <uint64_t>t))
                shuffle(&st, order, n)
                for i in range(n):
                    taken[i] = 0
                for p in range(n):
                    a = order[p]
                    best = -1.0
                    nf = 0
                    for i in range(n):
                        if taken[i]:
                            continue
                        x = v[a, i]
                        if x > best:
                            best = x
                            favs[0] = i
                            nf = 1
                        elif x == best:
                            favs[nf] = i
                            nf += 1
                    if nf > 1:
                        item = favs[randbelow(&st, <uint64_t>nf)]
                    else:
                        item = favs[0]
                    taken[item] = 1
                    assign[a] = item
                w = 0.0
                for a in range(n):
                    w += v[a, assign[a]]
                res[t - start] = w
    finally:
        free(order); free(favs); free(assign); free(taken)
    return out


# --- RSD* ---------------------------------------------------------------------

def rsd_star_welfare(values, declared, uint64_t seed, int64_t start, int64_t stop):
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[:, ::1] d = np.ascontiguousarray(declared, dtype=np.float64)
    cdef int64_t n = v.shape[0]
    out = np.empty(stop - start, dtype=np.float64)
    cdef double[::1] res = out
    cdef int64_t* order = <int64_t*>malloc(max(n, 1) * sizeof(int64_t))
    cdef int64_t* ranks = <int64_t*>malloc(max(n, 1) * sizeof(int64_t))
    cdef int64_t* assign = <int64_t*>malloc(max(n, 1) * sizeof(int64_t))
    cdef char* taken = <char*>malloc(max(n, 1))
    cdef Xoshiro st
    cdef uint64_t tseed
    cdef int64_t t, p, a, i, best, free_item
    cdef double w
    if order == NULL or ranks == NULL or assign == NULL or taken == NULL:
        free(order); free(ranks); free(assign); free(taken)
        raise MemoryError()
    try:
        with nogil:
            for t in range(start, stop):
                tseed = derive(seed, <uint64_t>t)
                seed_stream(&st, derive(tseed, ORDER_STREAM))
                shuffle(&st, order, n)
                seed_stream(&st, derive(tseed, RANK_STREAM))
                shuffle(&st, ranks, n)
                for i in range(n):
                    taken[i] = 0
                    assign[i] = -1
                for p in range(n):
                    a = order[p]
                    best = -1
                    for i in range(n):
                        if not taken[i] and d[a, i] == 1.0 and (best == -1 or ranks[i] > ranks[best]):
                            best = i
                    if best != -1:
                        taken[best] = 1
                        assign[a] = best
                free_item = 0
                for a in range(n):
                    if assign[a] == -1:
                        while taken[free_item]:
                            free_item += 1
                        taken[free_item] = 1
                        assign[a] = free_item
                w = 0.0
                for a in range(n):
                    w += v[a, assign[a]]
                res[t - start] = w
    finally:
        free(order); free(ranks); free(assign); free(taken)
    return out


# --- Fact instance --------------------------------------------------------------

cdef struct FactState:
    int64_t k
    int64_t used
    int64_t next
    char* alive
    int64_t* items
    int64_t* before
    int64_t* band
    int64_t* band_slot
    int64_t band_len


cdef inline void fact_kill(FactState* s, int64_t item) noexcept nogil:
    cdef int64_t slot, last
    s.alive[item] = 0
    slot = s.band_slot[item]
    if slot != -1:
        s.band_len -= 1
        last = s.band[s.band_len]
        if last != item:
            s.band[slot] = last
            s.band_slot[last] = slot
        s.band_slot[item] = -1


cdef inline void fact_random_picks(FactState* s, int64_t count) noexcept nogil:
    cdef int64_t used = s.used
    cdef int64_t j = s.next
    cdef int64_t avail
    while count > 0:
        while j < s.k and not s.alive[s.items[j]]:
            j += 1
        if j == s.k:
            used += count
            break
        avail = s.before[j] - used
        if count <= avail:
            used += count
            break
        used += avail
        count -= avail + 1
        fact_kill(s, s.items[j])
    s.used = used
    s.next = j


def fact_welfare(int64_t k, int64_t z, uint64_t seed, int64_t start, int64_t stop):
    cdef int64_t n = k + z
    cdef int64_t half = k // 2
    cdef int64_t band_lo = half - 1
    out = np.empty(stop - start, dtype=np.float64)
    cdef double[::1] res = out
    cdef int64_t* agent_pos = <int64_t*>malloc(k * sizeof(int64_t))
    cdef int64_t* item_pos = <int64_t*>malloc(k * sizeof(int64_t))
    cdef int64_t* agents = <int64_t*>malloc(k * sizeof(int64_t))
    cdef int64_t* items = <int64_t*>malloc(k * sizeof(int64_t))
    cdef int64_t* before = <int64_t*>malloc(k * sizeof(int64_t))
    cdef int64_t* band = <int64_t*>malloc(k * sizeof(int64_t))
    cdef int64_t* band_slot = <int64_t*>malloc(k * sizeof(int64_t))
    cdef char* alive = <char*>malloc(k)
    cdef FactState s
    cdef Xoshiro st
    cdef int64_t t, j, step, prev, a, own, size, r, welfare
    if (agent_pos == NULL or item_pos == NULL or agents == NULL or items == NULL
            or before == NULL or band == NULL or band_slot == NULL or alive == NULL):
        free(agent_pos); free(item_pos); free(agents); free(items)
        free(before); free(band); free(band_slot); free(alive)
        raise MemoryError()
    s.k = k
    s.alive = alive
    s.items = items
    s.before = before
    s.band = band
    s.band_slot = band_slot
    try:
        with nogil:
            for t in range(start, stop):
                seed_stream(&st, derive(seed, <uint64_t>t))
                sorted_sample(&st, n, k, agent_pos)
                sorted_sample(&st, n, k, item_pos)
                shuffle(&st, agents, k)
                shuffle(&st, items, k)
                for j in range(k):
                    before[j] = item_pos[j] - j
                    alive[j] = 1
                    band_slot[j] = -1
                s.band_len = 0
                for j in range(band_lo, k):
                    band[s.band_len] = j
                    band_slot[j] = s.band_len
                    s.band_len += 1
                s.used = 0
                s.next = 0
                welfare = 0
                prev = -1
                for step in range(k):
                    fact_random_picks(&s, agent_pos[step] - prev - 1)
                    prev = agent_pos[step]
                    a = agents[step]
                    if a < half:
                        own = 1 if (a < band_lo and alive[a]) else 0
                        size = s.band_len + own
                        if size:
                            r = <int64_t>randbelow(&st, <uint64_t>size) if size > 1 else 0
                            fact_kill(&s, band[r] if r < s.band_len else a)
                            welfare += 1
                            continue
                    elif alive[a]:
                        fact_kill(&s, a)
                        welfare += 1
                        continue
                    fact_random_picks(&s, 1)
                res[t - start] = <double>welfare
    finally:
        free(agent_pos); free(item_pos); free(agents); free(items)
        free(before); free(band); free(band_slot); free(alive)
    return out
