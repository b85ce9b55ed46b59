from collections import Counter

import numpy as np
import pytest

from matchbench.errors import ArgumentError, StructuralError
from matchbench.instance import UNASSIGNED, social_welfare
from matchbench.mechanisms import (
    MECHANISMS,
    ranking,
    ranking_mechanism,
    rsd,
    rsd_star,
    rsd_star_pick,
    run_mechanism,
    sd_fixed_order,
    serial_pick,
    uniform_max_matching,
)
from matchbench.oracle import enumerate_max_matchings
from matchbench.optimal import optimal_value
from matchbench.rng import RngStream, trial_stream

from conftest import dich, norm


def test_serial_pick_without_ties_is_deterministic():
    rows = [[0.2, 0.9, 0.1], [0.3, 0.8, 0.5], [0.4, 0.6, 0.7]]
    assert serial_pick(rows, [0, 1, 2], RngStream(0)) == [1, 2, 0]
    assert serial_pick(rows, [2, 1, 0], RngStream(0)) == [0, 1, 2]


def test_serial_pick_draws_only_on_ties():
    rng = RngStream(9)
    serial_pick([[0.5, 0.2], [0.1, 0.3]], [0, 1], rng)
    assert rng.position == 0
    serial_pick([[1, 1], [1, 1]], [0, 1], rng)
    assert rng.position == 1  # second agent has a single remaining item


def test_tie_breaking_is_uniform():
    rows = [[1, 1, 1], [0, 0, 0], [0, 0, 0]]
    counts = Counter(serial_pick(rows, [0, 1, 2], RngStream(s))[0] for s in range(3000))
    assert all(abs(c - 1000) < 120 for c in counts.values())


def test_sd_fixed_order_checks_permutation():
    inst = dich(np.eye(3))
    assert sd_fixed_order(inst, [2, 0, 1], RngStream(0)).assignment == (0, 1, 2)
    with pytest.raises(ArgumentError):
        sd_fixed_order(inst, [0, 0, 1], RngStream(0))


def test_rsd_identity_is_always_optimal():
    inst = dich(np.eye(5))
    for s in range(50):
        assert social_welfare(inst, rsd(inst, RngStream(s))) == 5.0


def test_rsd_frequencies_on_tiny(tiny):
    # agent 0 gets item 0 only when it moves first and breaks its tie that way
    got = Counter(rsd(tiny, trial_stream(0, t))[0] for t in range(8000))
    assert abs(got[0] / 8000 - 0.25) < 0.02


def test_rsd_star_pick_rules():
    declared = [[1, 1, 0], [1, 0, 0], [0, 0, 0]]
    # ranks: item 1 highest, so agent 0 takes it; agent 1 takes item 0; agent 2 filled with item 2
    assert rsd_star_pick(declared, [0, 1, 2], [0, 2, 1]) == (1, 0, 2)
    # agent 1 first takes item 0; agent 0 then takes item 1
    assert rsd_star_pick(declared, [1, 0, 2], [2, 0, 1]) == (1, 0, 2)
    # agent 0 first with item 0 ranked highest: agent 1 is discarded and filled
    assert rsd_star_pick(declared, [0, 1, 2], [2, 0, 1]) == (0, 1, 2)
    assert rsd_star_pick([[0, 0], [0, 0]], [1, 0], [0, 1]) == (0, 1)


def test_rsd_star_requires_dichotomous_and_declarations_shape():
    with pytest.raises(ArgumentError):
        rsd_star(norm([[0.5]]), RngStream(0))
    with pytest.raises(StructuralError):
        rsd_star(dich([[1, 0], [0, 1]]), RngStream(0), declarations=[[1, 0]])
    with pytest.raises(ArgumentError):
        rsd_star(dich([[1, 0], [0, 1]]), RngStream(0), declarations=[[0.5, 0], [0, 1]])


def test_rsd_star_uses_declarations():
    inst = dich(np.eye(2))
    m = rsd_star(inst, RngStream(0), declarations=[[0, 0], [0, 0]])
    assert m.assignment == (0, 1)  # both discarded, lowest-index fill
    m = rsd_star(inst, RngStream(0), declarations=[[0, 1], [0, 0]])
    assert m.assignment == (1, 0)


def test_ranking_online():
    # offline vertices 0, 1 with ranks 0 < 1; first arrival prefers 1
    assert ranking([0, 1], [[0, 1], [1], [0]]) == [(0, 1), (2, 0)]
    assert ranking([1, 0], [[0, 1], [1], [0]]) == [(0, 0), (1, 1)]
    assert ranking([0], [[]]) == []


def test_ranking_mechanism_is_maximal():
    inst = dich([[1, 1, 0], [1, 0, 0], [0, 0, 1]])
    for t in range(20):
        m = ranking_mechanism(inst, trial_stream(1, t))
        assert m.is_complete and social_welfare(inst, m) >= 2


def test_uniform_max_matching_is_maximum_and_uniform():
    inst = dich([[1, 1, 0], [1, 1, 0], [0, 1, 0]])
    enum = enumerate_max_matchings(inst.values)
    nu = optimal_value(inst)
    counts = Counter()
    for t in range(3000):
        m = uniform_max_matching(inst, trial_stream(4, t), enumeration=enum)
        assert social_welfare(inst, m) == nu and m.is_complete
        counts[m.assignment] += 1
    # {00,11}, {00,21}, {01,10}, {10,21}
    assert len(counts) == enum.count == 4
    assert all(abs(c - 750) < 100 for c in counts.values())


def test_uniform_max_rejects_normalized():
    with pytest.raises(ArgumentError):
        uniform_max_matching(norm([[0.5]]), RngStream(0))


@pytest.mark.parametrize("name", MECHANISMS)
def test_run_mechanism_dispatch(name, tiny):
    m = run_mechanism(name, tiny, RngStream(1))
    assert m.is_complete and UNASSIGNED not in m.assignment


def test_run_mechanism_unknown(tiny):
    with pytest.raises(ArgumentError):
        run_mechanism("boston", tiny, RngStream(0))
