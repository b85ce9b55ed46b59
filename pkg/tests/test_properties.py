import math

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from matchbench.instance import Instance, loads, dumps, social_welfare
from matchbench.mechanisms import MECHANISMS, run_mechanism
from matchbench.optimal import max_weight_matching, optimal_value
from matchbench.oracle import exact_rsd_welfare, uniform_max_allocation
from matchbench.rng import RngStream

from conftest import brute_optimum

unit = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def normalized(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    return Instance(draw(arrays(np.float64, (n, n), elements=unit)), "normalized")


@st.composite
def dichotomous(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    return Instance(draw(arrays(np.float64, (n, n), elements=st.sampled_from([0.0, 1.0]))), "dichotomous")


@st.composite
def unit_range(draw, max_n=5):
    n = draw(st.integers(2, max_n))
    rows = []
    for _ in range(n):
        row = draw(arrays(np.float64, n, elements=unit))
        lo, hi = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
        row[lo], row[hi] = 0.0, 1.0
        rows.append(row)
    return Instance(np.array(rows), "unit_range")


@given(normalized(max_n=6))
def test_hungarian_is_optimal(inst):
    res = max_weight_matching(inst)
    assert res.matching.is_complete
    assert math.isclose(res.value, brute_optimum(inst.values), abs_tol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.one_of(normalized(), dichotomous(), unit_range()))
def test_exact_rsd_obeys_the_welfare_bounds(inst):
    nu, n = optimal_value(inst), inst.n
    w = exact_rsd_welfare(inst)
    tol = 1e-12
    assert w <= nu + tol
    assert w >= nu * nu / (math.e * n) - tol
    assert w >= nu - n + n * math.exp(-nu / n) - tol
    if inst.is_dichotomous:
        assert w >= nu / 3 - tol
    if inst.pref_class.value == "unit_range":
        assert w >= nu / math.sqrt(math.e * n) - tol


@settings(max_examples=40, deadline=None)
@given(st.one_of(normalized(), dichotomous()), st.randoms(use_true_random=False))
def test_exact_rsd_is_relabeling_invariant(inst, rnd):
    p = list(range(inst.n))
    q = list(range(inst.n))
    rnd.shuffle(p)
    rnd.shuffle(q)
    other = Instance(inst.values[p][:, q], inst.pref_class)
    assert math.isclose(exact_rsd_welfare(inst), exact_rsd_welfare(other), abs_tol=1e-12)


@settings(max_examples=40, deadline=None)
@given(dichotomous(), st.integers(0, 2**64 - 1), st.sampled_from(MECHANISMS))
def test_mechanisms_output_complete_matchings(inst, seed, name):
    m = run_mechanism(name, inst, RngStream(seed))
    assert m.is_complete
    assert 0 <= social_welfare(inst, m) <= optimal_value(inst)


@settings(max_examples=40, deadline=None)
@given(dichotomous())
def test_uniform_max_is_optimal(inst):
    assert uniform_max_allocation(inst).welfare == optimal_value(inst)


@given(st.one_of(normalized(max_n=4), dichotomous(max_n=4), unit_range(max_n=4)))
def test_json_round_trip_is_exact(inst):
    assert loads(dumps(inst)) == inst
