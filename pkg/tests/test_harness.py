import csv
import io
import json
import math

import numpy as np
import pytest

from matchbench import harness
from matchbench.errors import ArgumentError
from matchbench.harness import (
    CSV_COLUMNS,
    TrialBatch,
    check_bound,
    dichotomous_exhaustive,
    random_suite,
    reproduce_fact,
    run_monte_carlo,
)
from matchbench.instance import gen_hardness_chunked, gen_random
from matchbench.oracle import exact_rsd_welfare

from conftest import dich, norm


def test_trial_batch_statistics():
    b = TrialBatch("rsd", 4, 0, 2.5, 5.0)
    assert b.variance == pytest.approx(5 / 3)
    assert b.stderr == pytest.approx(math.sqrt(5 / 3 / 4))
    lo, hi = b.ci95
    assert lo == pytest.approx(2.5 - 1.96 * b.stderr) and hi == pytest.approx(2.5 + 1.96 * b.stderr)
    assert TrialBatch("rsd", 1, 0, 1.0, 0.0).stderr == 0.0


def test_chunk_reduction_matches_numpy():
    rng = np.random.default_rng(0)
    data = rng.random(10_000)
    count, mean, m2 = harness._reduce([data[s:e] for s, e in harness._chunks(data.size, 777)])
    assert count == data.size
    assert mean == pytest.approx(data.mean(), rel=1e-13)
    assert m2 / (count - 1) == pytest.approx(data.var(ddof=1), rel=1e-12)


def test_identity_is_degenerate():
    b = run_monte_carlo(dich(np.eye(3)), "rsd", 100, seed=4)
    assert b.mean == 3.0 and b.stderr == 0.0 and b.trials == 100


def test_tiny_mean_near_oracle(tiny):
    b = run_monte_carlo(tiny, "rsd", 100_000, seed=1)
    assert abs(b.mean - 1.75) <= 4 * b.stderr


@pytest.mark.parametrize("mechanism", ["rsd", "rsd-star", "ranking", "uniform-max", "sd-fixed"])
def test_determinism_across_runs_and_threads(mechanism):
    inst = gen_random(8, "dichotomous", 0.4, seed=2)
    a = run_monte_carlo(inst, mechanism, 5000, seed=9)
    b = run_monte_carlo(inst, mechanism, 5000, seed=9)
    c = run_monte_carlo(inst, mechanism, 5000, seed=9, threads=4)
    assert a == b == c


def test_python_backend_gives_identical_batch():
    inst = gen_random(6, "normalized", seed=1)
    assert run_monte_carlo(inst, "rsd", 3000, 5, backend="python") == run_monte_carlo(inst, "rsd", 3000, 5)


def test_run_monte_carlo_arguments(tiny):
    with pytest.raises(ArgumentError):
        run_monte_carlo(tiny, "rsd", 0)
    with pytest.raises(ArgumentError):
        run_monte_carlo(tiny, "boston", 10)
    with pytest.raises(ArgumentError):
        run_monte_carlo(norm([[0.5]]), "rsd-star", 10)


def test_sd_fixed_order_is_passed_through(tiny):
    # agent 1 first takes item 0, agent 0 gets item 1: welfare 2 every time
    assert run_monte_carlo(tiny, "sd-fixed", 200, order=[1, 0]).mean == 2.0


def test_norm_quadratic_value_when_optimum_is_n():
    inst = norm(np.eye(4))
    b = run_monte_carlo(inst, "rsd", 10)
    r = check_bound(inst, b, "norm_quadratic")
    assert r.bound_value == pytest.approx(4 / math.e) and r.passed and r.kind == "lower"
    assert r.optimum == 4


def test_bound_catalog_values():
    assert harness.bound_value("dich_third", 6, 10) == 2
    assert harness.bound_value("norm_exponential", 5, 5) == pytest.approx(5 / math.e)
    assert harness.bound_value("unit_range", 3, 3) == pytest.approx(3 / math.sqrt(3 * math.e))
    assert harness.bound_value("rsd_star_069", 10, 10) == pytest.approx(6.9)
    assert harness.bound_value("hardness_ceiling", 2, 12, eps=0.1) == pytest.approx(4 / 12 + 0.1)
    with pytest.raises(ArgumentError):
        harness.bound_value("hardness_ceiling", 2, 12)


def test_inapplicable_bounds_raise(tiny):
    b = run_monte_carlo(tiny, "rsd", 10)
    with pytest.raises(ArgumentError):
        check_bound(tiny, b, "unit_range")
    with pytest.raises(ArgumentError):
        check_bound(tiny, b, "rsd_star_069")
    with pytest.raises(ArgumentError):
        check_bound(tiny, b, "no_such_bound")
    with pytest.raises(ArgumentError):
        check_bound(norm([[0.2, 0.1], [0.3, 0.4]]), run_monte_carlo(tiny, "rsd", 10), "dich_third")


def test_pass_flag_follows_slack(tiny):
    b = TrialBatch("rsd", 100, 0, 0.3, 99.0)  # stderr 0.1
    r = check_bound(tiny, b, "dich_third", optimum=2.0)
    assert r.slack == pytest.approx(0.3) and not r.passed  # 0.3 < 2/3 - 0.3
    assert check_bound(tiny, b, "dich_third", optimum=2.0, slack=0.4).passed
    assert check_bound(tiny, b, "dich_third", optimum=0.9, slack=0.0).passed


@pytest.mark.parametrize("n", [3, 12, 24])
def test_hardness_single_chunk_closed_form(n):
    # the special agent wins the item iff it comes first: 1/n + (1 - 1/n) eps
    eps = 0.1
    inst = gen_hardness_chunked(n, 1, eps)
    b = run_monte_carlo(inst, "rsd", 40_000, seed=n)
    assert abs(b.mean - (1 / n + (1 - 1 / n) * eps)) <= 4 * b.stderr
    r = check_bound(inst, b, "hardness_ceiling", eps=eps)
    assert r.passed and r.kind == "upper" and r.bound_value == pytest.approx(1 / n + eps)


@pytest.mark.parametrize("n, k", [(4, 2), (6, 2), (6, 3), (8, 4)])
def test_hardness_chunks_match_oracle(n, k):
    # with several chunks, agents whose chunk item is gone pick among
    # all-zero items and may take another chunk's item, so the per-chunk
    # estimate k^2/n + (k - k^2/n) eps/k only bounds the mean from above
    eps = 0.1
    inst = gen_hardness_chunked(n, k, eps)
    exact = exact_rsd_welfare(inst)
    assert exact < k * k / n + (k - k * k / n) * (eps / k) <= k * k / n + eps
    b = run_monte_carlo(inst, "rsd", 40_000, seed=k)
    assert abs(b.mean - exact) <= 4 * b.stderr
    assert check_bound(inst, b, "hardness_ceiling", eps=eps).passed


def test_reproduce_fact_small():
    res = reproduce_fact(2, 0, 100_000, seed=3)
    assert abs(res.mean - 1.75) <= 4 * res.stderr
    assert res.ratio == pytest.approx(2 / res.mean) and res.optimum == 2
    assert abs(res.ratio - 8 / 7) < 0.01
    with pytest.raises(ArgumentError):
        reproduce_fact(3, 0, 10)


def test_reproduce_fact_deterministic_and_stable():
    a = reproduce_fact(200, 20_000, 2000, seed=1)
    assert a == reproduce_fact(200, 20_000, 2000, seed=1, threads=3)
    b = reproduce_fact(200, 20_000, 4000, seed=1)
    # doubling trials moves the ratio by less than 3 combined standard errors
    ratio_se = lambda r: r.k * r.stderr / r.mean**2
    assert abs(a.ratio - b.ratio) < 3 * math.hypot(ratio_se(a), ratio_se(b))


def test_random_suite_is_deterministic():
    s1 = random_suite("dichotomous", 12, seed=4)
    s2 = random_suite("dichotomous", 12, seed=4)
    assert [i for i, _ in s1] == [i for i, _ in s2] and all(a == b for (_, a), (_, b) in zip(s1, s2))
    assert all(5 <= inst.n <= 50 for _, inst in s1)
    assert {iid.rsplit("-d", 1)[1] for iid, _ in s1} == {"0.1", "0.3", "0.7"}


def test_exhaustive_suite_counts():
    assert len(dichotomous_exhaustive(2)) == 16
    assert len(dichotomous_exhaustive(2, up_to_isomorphism=True)) == 7
    assert len(dichotomous_exhaustive(3, up_to_isomorphism=True)) == 36
    with pytest.raises(ArgumentError):
        dichotomous_exhaustive(5)


def test_canonical_codes_are_invariant():
    rng = np.random.default_rng(0)
    mats = (rng.random((50, 4, 4)) < 0.5).astype(int)
    base = harness.canonical_codes(mats)
    for _ in range(5):
        shuffled = mats[:, rng.permutation(4)][:, :, rng.permutation(4)]
        assert np.array_equal(harness.canonical_codes(shuffled), base)


def test_report_csv_and_json(tiny):
    b = run_monte_carlo(tiny, "rsd", 1000, seed=2)
    r = check_bound(tiny, b, "dich_third", instance_id="tiny")
    rows = list(csv.DictReader(io.StringIO(harness.reports_to_csv([r]))))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[0]["pass"] == "true" and float(rows[0]["mean"]) == b.mean
    assert float(rows[0]["bound_value"]) == 2 / 3
    doc = json.loads(harness.to_json(r.to_dict()))
    assert doc["pass"] is True and doc["measured"] == b.mean


def test_exact_reports(tiny):
    reports = harness.exact_reports(tiny, "uniform-max", "tiny")
    assert [r.bound_id for r in reports] == ["truthfulness", "symmetry", "optimality"]
    assert all(r.passed for r in reports)
