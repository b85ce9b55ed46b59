"""Command-line entry point: ``matchbench <gen|optimal|run|exact|verify|fact>``.

Every subcommand is a thin adapter over the library; all numbers printed
here come straight from library calls.  Exit codes: 0 success, 1 a bound or
truthfulness check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import harness, instance as instance_io
from .errors import MatchbenchError
from .instance import PreferenceClass, gen_fact_instance, gen_hardness_chunked, gen_random
from .mechanisms import DEFAULT_ENUMERATION_BUDGET, MECHANISMS
from .optimal import max_weight_matching
from .oracle import (
    DEFAULT_MAX_N,
    ORACLE_MECHANISMS,
    exact_rsd_welfare,
    rsd_allocation,
    rsd_star_allocation,
    uniform_max_allocation,
    TRUTHFUL_MAX_N,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUITES = ("dichotomous-random", "normalized-random", "unit-range-random",
          "dichotomous-exhaustive", "hardness")
FACT_COLUMNS = ("k", "z", "n", "trials", "seed", "mean", "stderr", "optimum", "ratio")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number(x) -> str:
    return format(float(x), ".17g")


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# --- instance source -----------------------------------------------------------


def _add_source(p, positional=True):
    if positional:
        p.add_argument("path", nargs="?", help="instance file (same as --instance)")
    p.add_argument("--instance", metavar="PATH", help="instance JSON file")
    p.add_argument("--family", choices=("fact", "hardness", "random"), help="generate the instance instead")
    p.add_argument("--k", type=int, help="fact: relevant agents; hardness: number of chunks")
    p.add_argument("--z", type=int, help="fact: number of dummy agents and items")
    p.add_argument("--n", type=int, help="hardness/random: instance size")
    p.add_argument("--eps", type=float, help="hardness: off-diagonal mass")
    p.add_argument("--class", dest="pref_class", help="random: dichotomous, normalized or unit-range")
    p.add_argument("--density", type=float, default=0.5, help="random dichotomous: P(entry = 1)")


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--family {args.family} needs --{name.replace('pref_class', 'class')}")


def _generate(args):
    if args.family == "fact":
        _require(args, "k", "z")
        return gen_fact_instance(args.k, args.z)
    if args.family == "hardness":
        _require(args, "n", "k", "eps")
        return gen_hardness_chunked(args.n, args.k, args.eps)
    _require(args, "n", "pref_class")
    return gen_random(args.n, PreferenceClass.parse(args.pref_class), args.density, args.seed)


def _load_instance(args):
    path = getattr(args, "path", None)
    sources = [s for s in (path, args.instance, args.family) if s is not None]
    if path is not None and args.instance is not None:
        raise UsageError("give the instance file either positionally or with --instance, not both")
    if len(sources) != 1:
        raise UsageError("exactly one instance source is required: --instance PATH or --family")
    if args.family is not None:
        return _generate(args)
    return instance_io.load(path or args.instance)


# --- subcommands ----------------------------------------------------------------


def cmd_gen(args):
    if args.family is None:
        raise UsageError("gen needs --family")
    _emit(args, instance_io.dumps(_generate(args)))
    return EXIT_OK


def cmd_optimal(args):
    inst = _load_instance(args)
    result = max_weight_matching(inst)
    if args.format == "json":
        _emit(args, harness.to_json({"optimum": result.value, "matching": list(result.matching.assignment)}))
    else:
        _emit(args, _number(result.value) + "\n")
    return EXIT_OK


def _parse_order(text, n):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--order must be a comma-separated agent list, got {text!r}") from None


def cmd_run(args):
    inst = _load_instance(args)
    batch = harness.run_monte_carlo(inst, args.mechanism, args.trials, args.seed, threads=args.threads,
                                    backend=args.backend, order=_parse_order(args.order, inst.n))
    instance_id = args.instance or args.path or args.family
    reports = [harness.check_bound(inst, batch, bid, eps=args.eps, instance_id=instance_id)
               for bid in args.bound or ()]
    if args.format == "json":
        doc = {"instance_id": instance_id, "batch": batch.to_dict(),
               "reports": [r.to_dict() for r in reports]}
        _emit(args, harness.to_json(doc))
    elif reports:
        _emit(args, harness.reports_to_csv(reports))
    else:
        _emit(args, harness.batch_to_csv(batch, instance_id))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_exact(args):
    inst = _load_instance(args)
    if args.mechanism == "rsd":
        if args.format != "json":
            _emit(args, _number(exact_rsd_welfare(inst, max_n=args.max_n)) + "\n")
            return EXIT_OK
        alloc = rsd_allocation(inst, max_n=args.max_n)
    elif args.mechanism == "uniform-max":
        alloc = uniform_max_allocation(inst, budget=args.budget)
    elif args.mechanism == "rsd-star":
        alloc = rsd_star_allocation(inst, max_n=min(args.max_n, TRUTHFUL_MAX_N))
    else:
        raise UsageError(f"exact supports {', '.join(ORACLE_MECHANISMS)}, not {args.mechanism}")
    if args.format == "json":
        _emit(args, harness.to_json({"mechanism": args.mechanism, "welfare": alloc.welfare,
                                     "expected_values": [float(v) for v in alloc.expected_values],
                                     "probs": [[float(p) for p in row] for row in alloc.probs]}))
    else:
        _emit(args, _number(alloc.welfare) + "\n")
    return EXIT_OK


def _suite(args):
    name = args.suite
    if name == "dichotomous-exhaustive":
        if args.n is None:
            raise UsageError("--suite dichotomous-exhaustive needs --n")
        return harness.dichotomous_exhaustive(args.n, up_to_isomorphism=not args.all)
    if name == "hardness":
        ns = (args.n,) if args.n is not None else (12, 24)
        return harness.hardness_suite(ns=ns, eps=0.1 if args.eps is None else args.eps)
    pref_class = name[: -len("-random")]
    n_range = (args.n, args.n) if args.n is not None else (5, 50)
    return harness.random_suite(pref_class, args.count, n_range=n_range, seed=args.seed)


def cmd_verify(args):
    if args.suite is None:
        inst = _load_instance(args)
        instance_id = args.instance or args.path or args.family
        if args.checks == "truthfulness":
            reports = harness.exact_reports(inst, args.mechanism, instance_id)
        else:
            reports = harness.run_bound_suite([(instance_id, inst)], args.mechanism, args.trials,
                                              args.seed, threads=args.threads, backend=args.backend)
    elif args.suite == "hardness":
        reports = harness.run_hardness_suite(_suite(args), args.trials, args.seed, threads=args.threads,
                                             backend=args.backend)
    else:
        suite = _suite(args)
        checks = args.checks or ("truthfulness" if args.suite == "dichotomous-exhaustive" else "bounds")
        if checks == "truthfulness":
            reports = [r for iid, inst in suite for r in harness.exact_reports(inst, args.mechanism, iid)]
        else:
            reports = harness.run_bound_suite(suite, args.mechanism, args.trials, args.seed,
                                              threads=args.threads, backend=args.backend)
    if not reports:
        raise UsageError(f"no bound applies to mechanism {args.mechanism} on this input")
    if args.format == "json":
        _emit(args, harness.to_json([r.to_dict() for r in reports]))
    else:
        _emit(args, harness.reports_to_csv(reports))
    failed = sum(not r.passed for r in reports)
    if failed:
        print(f"{failed} of {len(reports)} checks failed", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_fact(args):
    if args.k is None or args.z is None:
        raise UsageError("fact needs --k and --z")
    result = harness.reproduce_fact(args.k, args.z, args.trials, args.seed, threads=args.threads,
                                    backend=args.backend)
    row = result.to_dict()
    row["n"] = result.k + result.z
    if args.format == "json":
        _emit(args, harness.to_json(row))
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FACT_COLUMNS)
        writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in FACT_COLUMNS])
        _emit(args, buf.getvalue())
    return EXIT_OK


# --- parser ---------------------------------------------------------------------


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")

    mc = _Parser(add_help=False)
    mc.add_argument("--trials", type=int, default=10_000)
    mc.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    mc.add_argument("--backend", choices=("cython", "python"), help="kernel backend (default: compiled if built)")

    guards = _Parser(add_help=False)
    guards.add_argument("--max-n", type=int, default=DEFAULT_MAX_N, help="largest n the exact oracle accepts")
    guards.add_argument("--budget", type=int, default=DEFAULT_ENUMERATION_BUDGET,
                        help="maximum-matching enumeration budget")

    parser = _Parser(prog="matchbench", description="One-sided matching mechanisms workbench.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="write an instance file")
    _add_source(p, positional=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("optimal", parents=[common], help="print the maximum social welfare")
    _add_source(p)
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser("run", parents=[common, mc], help="Monte Carlo welfare of a mechanism")
    _add_source(p)
    p.add_argument("--mechanism", choices=MECHANISMS, default="rsd")
    p.add_argument("--order", help="sd-fixed: comma-separated agent order")
    p.add_argument("--bound", action="append", choices=tuple(harness.BOUNDS), help="check this bound (repeatable)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("exact", parents=[common, guards], help="exact expected welfare from the oracle")
    _add_source(p)
    p.add_argument("--mechanism", choices=ORACLE_MECHANISMS, default="rsd")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("verify", parents=[common, mc], help="bound, truthfulness and symmetry checks")
    _add_source(p)
    p.add_argument("--mechanism", choices=MECHANISMS, default="rsd")
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--count", type=int, default=20, help="random suites: number of instances")
    p.add_argument("--checks", choices=("bounds", "truthfulness"),
                   help="bounds (Monte Carlo) or truthfulness (exact truthfulness/symmetry/optimality)")
    p.add_argument("--all", action="store_true",
                   help="exhaustive suite: keep every matrix instead of one per relabeling class")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fact", parents=[common, mc], help="RSD on the sparse Fact instance")
    p.add_argument("--k", type=int)
    p.add_argument("--z", type=int)
    p.set_defaults(func=cmd_fact)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "trials", 1) < 1:
            raise UsageError("--trials must be at least 1")
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        return args.func(args)
    except UsageError as exc:
        print(f"matchbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MatchbenchError, ValueError, OSError) as exc:
        print(f"matchbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
