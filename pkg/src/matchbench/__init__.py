"""Welfare of truthful one-sided matching mechanisms.

RSD, RSD* and uniform-random-maximum-matching on dichotomous, normalized and
unit-range valuation instances, with exact optimum solvers, a brute-force
expectation oracle for small instances and a Monte Carlo harness.
"""

from .errors import (
    ArgumentError,
    MatchbenchError,
    ParseError,
    ResourceLimitError,
    StructuralError,
    ValidationError,
)
from .harness import (
    BoundReport,
    FactResult,
    TrialBatch,
    check_bound,
    reproduce_fact,
    run_monte_carlo,
)
from .instance import (
    UNASSIGNED,
    Instance,
    Matching,
    PreferenceClass,
    gen_fact_instance,
    gen_hardness_chunked,
    gen_random,
    load,
    loads,
    save,
    social_welfare,
)
from .kernels import get_backend
from .mechanisms import MECHANISMS, ranking, rsd, rsd_star, run_mechanism, sd_fixed_order, uniform_max_matching
from .optimal import hopcroft_karp, max_cardinality_matching, max_weight_matching, optimal_value
from .oracle import (
    check_symmetry,
    check_truthfulness,
    count_matchings_through_edge,
    enumerate_max_matchings,
    exact_deviation_value,
    exact_rsd_welfare,
    rsd_allocation,
    rsd_star_allocation,
    uniform_max_allocation,
)
from .rng import RngStream, derive_seed, trial_stream

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
