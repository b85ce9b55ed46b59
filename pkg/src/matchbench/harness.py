"""Monte Carlo welfare estimation, bound checks and the Fact reproduction.

Trials are split into fixed-size chunks.  Chunks may run on several threads
(the compiled kernels release the GIL), but their moments are always merged
in chunk order, so a result depends only on ``(seed, trials)`` and never on
the thread count.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ArgumentError
from .instance import Instance, PreferenceClass, gen_hardness_chunked, gen_random, social_welfare
from .kernels import get_backend
from .mechanisms import MECHANISMS, run_mechanism
from .optimal import optimal_value
from .oracle import (
    check_symmetry,
    check_truthfulness,
    enumerate_max_matchings,
    mechanism_allocation,
)
from .rng import derive_seed, trial_stream

CHUNK_TRIALS = 2048
DEFAULT_SLACK_SE = 3.0
Z95 = 1.96

CSV_COLUMNS = ("instance_id", "mechanism", "trials", "seed", "mean", "stderr",
               "bound_id", "bound_value", "pass")


@dataclass(frozen=True)
class TrialBatch:
    """Streamed moments of per-trial welfare."""

    mechanism: str
    trials: int
    seed: int
    mean: float
    m2: float

    @property
    def variance(self) -> float:
        if self.trials < 2:
            return 0.0
        return max(self.m2, 0.0) / (self.trials - 1)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.trials)

    @property
    def ci95(self):
        half = Z95 * self.stderr
        return (self.mean - half, self.mean + half)

    def to_dict(self):
        out = asdict(self)
        out.update(variance=self.variance, stderr=self.stderr, ci95=list(self.ci95))
        return out


@dataclass(frozen=True)
class BoundReport:
    bound_id: str
    kind: str
    measured: float
    bound_value: float
    slack: float
    passed: bool
    instance_id: str = ""
    mechanism: str = ""
    trials: int = 0
    seed: int = 0
    stderr: float = 0.0
    optimum: float = float("nan")
    extra: dict = field(default_factory=dict)

    def to_row(self):
        return {
            "instance_id": self.instance_id,
            "mechanism": self.mechanism,
            "trials": self.trials,
            "seed": self.seed,
            "mean": self.measured,
            "stderr": self.stderr,
            "bound_id": self.bound_id,
            "bound_value": self.bound_value,
            "pass": self.passed,
        }

    def to_dict(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


@dataclass(frozen=True)
class FactResult:
    k: int
    z: int
    trials: int
    seed: int
    mean: float
    stderr: float
    optimum: float
    ratio: float

    def to_dict(self):
        return asdict(self)


# --- moment reduction ---------------------------------------------------------


def _chunks(trials, size=CHUNK_TRIALS):
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def _reduce(arrays):
    """Merge per-chunk (count, mean, M2) in order (Chan et al. pairwise update)."""
    count, mean, m2 = 0, 0.0, 0.0
    for arr in arrays:
        nb = arr.size
        if nb == 0:
            continue
        mb = float(np.mean(arr))
        m2b = float(np.sum((arr - mb) ** 2))
        if count == 0:
            count, mean, m2 = nb, mb, m2b
            continue
        total = count + nb
        delta = mb - mean
        mean = mean + delta * nb / total
        m2 = m2 + m2b + delta * delta * count * nb / total
        count = total
    return count, mean, m2


def _map_chunks(fn, trials, threads):
    spans = _chunks(trials)
    if threads and threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda span: fn(*span), spans))
    return [fn(*span) for span in spans]


def _python_trials(inst, mechanism, seed, start, stop, order=None, declarations=None, enumeration=None):
    out = np.empty(stop - start)
    for t in range(start, stop):
        m = run_mechanism(mechanism, inst, trial_stream(seed, t), order=order,
                          declarations=declarations, enumeration=enumeration)
        out[t - start] = social_welfare(inst, m)
    return out


def welfare_sampler(inst: Instance, mechanism: str, seed: int, backend=None, order=None, declarations=None):
    """Function ``(start, stop) -> per-trial welfare`` for a mechanism on ``inst``."""
    if mechanism not in MECHANISMS:
        raise ArgumentError(f"unknown mechanism {mechanism!r}; expected one of {', '.join(MECHANISMS)}")
    kernels = get_backend(backend)
    seed &= (1 << 64) - 1
    if mechanism == "rsd":
        values = np.ascontiguousarray(inst.values)
        return lambda start, stop: kernels.rsd_welfare(values, seed, start, stop)
    if mechanism == "rsd-star":
        if not inst.is_dichotomous:
            raise ArgumentError("rsd-star needs a dichotomous instance")
        values = np.ascontiguousarray(inst.values)
        declared = values if declarations is None else np.ascontiguousarray(declarations, dtype=np.float64)
        if declared.shape != values.shape or not np.all((declared == 0.0) | (declared == 1.0)):
            raise ArgumentError("rsd-star declarations must be a dichotomous n x n profile")
        return lambda start, stop: kernels.rsd_star_welfare(values, declared, seed, start, stop)
    enumeration = None
    if mechanism == "uniform-max":
        if not inst.is_dichotomous and declarations is None:
            raise ArgumentError("uniform-max needs a dichotomous instance")
        enumeration = enumerate_max_matchings(inst.values if declarations is None else declarations)
    return lambda start, stop: _python_trials(inst, mechanism, seed, start, stop, order,
                                              declarations, enumeration)


def run_monte_carlo(inst: Instance, mechanism: str, trials: int, seed: int = 0, threads: int = 1,
                    backend=None, order=None, declarations=None) -> TrialBatch:
    """Estimate a mechanism's expected welfare on ``inst``.

    Trial ``t`` draws from the stream derived from ``(seed, t)``.
    """
    if trials < 1:
        raise ArgumentError("trials must be at least 1")
    sampler = welfare_sampler(inst, mechanism, seed, backend, order, declarations)
    count, mean, m2 = _reduce(_map_chunks(sampler, trials, threads))
    return TrialBatch(mechanism, count, seed, mean, m2)


# --- bounds -------------------------------------------------------------------

_ALL = frozenset(PreferenceClass)
_DICH = frozenset({PreferenceClass.DICHOTOMOUS})


@dataclass(frozen=True)
class Bound:
    kind: str
    classes: frozenset
    mechanisms: frozenset
    description: str


BOUNDS = {
    "dich_third": Bound("lower", _DICH, frozenset({"rsd"}), "nu(O)/3"),
    "norm_quadratic": Bound("lower", _ALL, frozenset({"rsd"}), "nu(O)^2/(e*n)"),
    "norm_exponential": Bound("lower", _ALL, frozenset({"rsd"}), "nu(O) - n + n*exp(-nu(O)/n)"),
    "unit_range": Bound("lower", frozenset({PreferenceClass.UNIT_RANGE}), frozenset({"rsd"}),
                        "nu(O)/sqrt(e*n)"),
    "rsd_star_069": Bound("lower", _DICH, frozenset({"rsd-star"}), "0.69*nu(O)"),
    "hardness_ceiling": Bound("upper", frozenset({PreferenceClass.NORMALIZED}), frozenset({"rsd"}),
                              "k^2/n + eps"),
}


def bound_value(bound_id: str, optimum: float, n: int, eps=None, k=None) -> float:
    """Numeric value of a catalogued bound for a given optimum and size."""
    if bound_id == "dich_third":
        return optimum / 3.0
    if bound_id == "norm_quadratic":
        return optimum * optimum / (math.e * n)
    if bound_id == "norm_exponential":
        return optimum - n + n * math.exp(-optimum / n)
    if bound_id == "unit_range":
        return optimum / math.sqrt(math.e * n)
    if bound_id == "rsd_star_069":
        return 0.69 * optimum
    if bound_id == "hardness_ceiling":
        if eps is None:
            raise ArgumentError("hardness_ceiling needs eps")
        k = round(optimum) if k is None else k
        return k * k / n + eps
    raise ArgumentError(f"unknown bound {bound_id!r}; expected one of {', '.join(BOUNDS)}")


def applicable_bounds(inst: Instance, mechanism: str):
    return [bid for bid, b in BOUNDS.items()
            if inst.pref_class in b.classes and mechanism in b.mechanisms and bid != "hardness_ceiling"]


def check_bound(inst: Instance, batch: TrialBatch, bound_id: str, optimum=None, slack=None,
                eps=None, k=None, instance_id="") -> BoundReport:
    """Compare a Monte Carlo mean against one catalogued bound.

    Lower bounds pass when ``mean >= bound - slack``, upper bounds when
    ``mean <= bound + slack``; ``slack`` defaults to three standard errors.
    """
    if bound_id not in BOUNDS:
        raise ArgumentError(f"unknown bound {bound_id!r}; expected one of {', '.join(BOUNDS)}")
    bound = BOUNDS[bound_id]
    if inst.pref_class not in bound.classes:
        raise ArgumentError(f"bound {bound_id} does not apply to {inst.pref_class.value} instances")
    if batch.mechanism not in bound.mechanisms:
        raise ArgumentError(f"bound {bound_id} does not apply to mechanism {batch.mechanism}")
    if optimum is None:
        optimum = optimal_value(inst)
    value = bound_value(bound_id, optimum, inst.n, eps=eps, k=k)
    if slack is None:
        slack = DEFAULT_SLACK_SE * batch.stderr
    if bound.kind == "lower":
        passed = batch.mean >= value - slack
    else:
        passed = batch.mean <= value + slack
    return BoundReport(bound_id, bound.kind, batch.mean, value, slack, bool(passed), instance_id,
                       batch.mechanism, batch.trials, batch.seed, batch.stderr, optimum)


# --- Fact reproduction ----------------------------------------------------------


def reproduce_fact(k: int, z: int, trials: int, seed: int = 0, threads: int = 1, backend=None) -> FactResult:
    """RSD on the Fact instance at full scale through the sparse simulation."""
    if k < 2 or k % 2:
        raise ArgumentError(f"k must be an even integer >= 2, got {k}")
    if z < 0:
        raise ArgumentError("z must be nonnegative")
    if trials < 1:
        raise ArgumentError("trials must be at least 1")
    kernels = get_backend(backend)
    seed &= (1 << 64) - 1
    count, mean, m2 = _reduce(_map_chunks(
        lambda start, stop: kernels.fact_welfare(k, z, seed, start, stop), trials, threads))
    batch = TrialBatch("rsd", count, seed, mean, m2)
    ratio = k / mean if mean > 0 else math.inf
    return FactResult(k, z, count, seed, mean, batch.stderr, float(k), ratio)


# --- suites -------------------------------------------------------------------


def random_suite(pref_class, count: int, n_range=(5, 50), densities=(0.1, 0.3, 0.7), seed: int = 0):
    """Deterministic list of ``(instance_id, Instance)`` pairs.

    Sizes are uniform on ``n_range`` (inclusive); dichotomous densities cycle
    through ``densities``.
    """
    pref_class = PreferenceClass.parse(pref_class)
    lo, hi = n_range
    if pref_class is PreferenceClass.UNIT_RANGE:
        lo = max(lo, 2)
    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    sizes = rng.integers(lo, hi + 1, size=count)
    suite = []
    for j in range(count):
        n = int(sizes[j])
        density = densities[j % len(densities)] if pref_class is PreferenceClass.DICHOTOMOUS else 0.0
        inst = gen_random(n, pref_class, density, derive_seed(seed, j))
        tag = f"-d{density}" if pref_class is PreferenceClass.DICHOTOMOUS else ""
        suite.append((f"{pref_class.value}-{j}-n{n}{tag}", inst))
    return suite


def _all_matrices(n):
    codes = np.arange(1 << (n * n), dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n * n)) & 1
    return bits.reshape(-1, n, n)


def canonical_codes(mats):
    """Isomorphism-invariant key of 0/1 matrices under row and column permutations."""
    mats = np.asarray(mats, dtype=np.int64)
    n = mats.shape[1]
    weights = 1 << np.arange(n)
    best = None
    for perm in itertools.permutations(range(n)):
        rows = np.sort(mats[:, :, list(perm)] @ weights, axis=1)
        key = np.zeros(len(mats), dtype=np.int64)
        for j in range(n):
            key = key * (1 << n) + rows[:, j]
        best = key if best is None else np.minimum(best, key)
    return best


def dichotomous_exhaustive(n: int, up_to_isomorphism: bool = False):
    """Every n x n 0/1 instance, or one representative per relabeling class."""
    if n < 1 or n > 4:
        raise ArgumentError("exhaustive dichotomous suites are limited to 1 <= n <= 4")
    mats = _all_matrices(n)
    index = np.arange(len(mats))
    if up_to_isomorphism:
        _, index = np.unique(canonical_codes(mats), return_index=True)
        index = np.sort(index)
    return [(f"dich-n{n}-{int(j)}", Instance(mats[j], PreferenceClass.DICHOTOMOUS)) for j in index]


def hardness_suite(ns=(12, 24), ks=(1, 2, 3, 4), eps=0.1):
    suite = []
    for n in ns:
        for k in ks:
            if n % k == 0:
                suite.append((f"hardness-n{n}-k{k}-eps{eps}", gen_hardness_chunked(n, k, eps), k, eps))
    return suite


def run_bound_suite(suite, mechanism: str, trials: int, seed: int = 0, bound_ids=None, threads=1,
                    backend=None):
    """Bound reports for every instance of a suite; instance j uses seed ``derive(seed, j)``."""
    reports = []
    for j, (instance_id, inst) in enumerate(suite):
        inst_seed = derive_seed(seed, j)
        batch = run_monte_carlo(inst, mechanism, trials, inst_seed, threads=threads, backend=backend)
        optimum = optimal_value(inst)
        ids = applicable_bounds(inst, mechanism) if bound_ids is None else bound_ids
        for bid in ids:
            reports.append(check_bound(inst, batch, bid, optimum=optimum, instance_id=instance_id))
    return reports


def run_hardness_suite(suite, trials: int, seed: int = 0, threads=1, backend=None):
    reports = []
    for j, (instance_id, inst, k, eps) in enumerate(suite):
        batch = run_monte_carlo(inst, "rsd", trials, derive_seed(seed, j), threads=threads, backend=backend)
        reports.append(check_bound(inst, batch, "hardness_ceiling", optimum=float(k), eps=eps, k=k,
                                   instance_id=instance_id))
    return reports


def exact_reports(inst: Instance, mechanism: str, instance_id=""):
    """Truthfulness, symmetry and (uniform-max) optimality checks as report rows."""
    reports = []
    truth = check_truthfulness(inst, mechanism)
    reports.append(BoundReport("truthfulness", "upper", truth.max_gain, 0.0, 1e-12, truth.truthful,
                               instance_id, mechanism, extra={
                                   "worst_agent": truth.worst_agent,
                                   "worst_row": list(truth.worst_row),
                                   "deviations_checked": truth.deviations_checked,
                                   "exhaustive": truth.exhaustive}))
    sym = check_symmetry(inst, mechanism)
    reports.append(BoundReport("symmetry", "upper", sym.max_difference, 0.0, 1e-12, sym.symmetric,
                               instance_id, mechanism, extra={"pairs_checked": sym.pairs_checked}))
    if mechanism == "uniform-max":
        optimum = optimal_value(inst)
        welfare = mechanism_allocation(inst, mechanism).welfare
        reports.append(BoundReport("optimality", "lower", welfare, optimum, 1e-12,
                                   abs(welfare - optimum) <= 1e-12, instance_id, mechanism,
                                   optimum=optimum))
    return reports


# --- output -------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        row = r.to_row()
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def batch_to_csv(batch: TrialBatch, instance_id="") -> str:
    row = {"instance_id": instance_id, "mechanism": batch.mechanism, "trials": batch.trials,
           "seed": batch.seed, "mean": batch.mean, "stderr": batch.stderr,
           "bound_id": "", "bound_value": "", "pass": ""}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def to_json(obj) -> str:
    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"
