"""Command-line entry point: ``cckp {run,experiment,oracle,levels,summary,selftest}``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from cckp import analysis
from cckp.algorithms import AlgorithmConfig, Init, run
from cckp.analysis import OracleGuardError
from cckp.harness import expr
from cckp.harness.experiment import (
    TARGETS,
    ExperimentSpec,
    load_experiment_spec,
    read_csv,
    run_experiment,
    rows_to_csv,
    write_csv,
)
from cckp.harness.instances import (
    InstanceSpec,
    InstanceSpecError,
    UnsupportedInstanceError,
    closed_form_target,
    generate_instance,
    load_instance_spec,
)
from cckp.harness.scaling import InsufficientDataError, format_report, scaling_summary
from cckp.harness.selftest import run_selftest

ALGOS = {"rls": ("rls",), "ea": ("ea",), "both": ("rls", "ea")}


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="instance file (JSON)")
    g = p.add_argument_group("inline instance (used when --spec is absent)")
    g.add_argument("--K", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--a", type=float, default=1.0)
    g.add_argument("--d", type=float, default=1.0)
    g.add_argument("--c", type=float, default=1.0)
    g.add_argument("--B", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--profit-kind", choices=("uniform", "mirrored", "explicit"), default="uniform")
    g.add_argument("--profits", type=float, nargs="+",
                   help="m values for mirrored profits, K*m row-major values for explicit")


def _instance(args):
    if args.spec:
        return generate_instance(load_instance_spec(args.spec))
    missing = [f"--{k}" for k in ("K", "m", "B", "alpha") if getattr(args, k) is None]
    if missing:
        raise InstanceSpecError([f"missing {', '.join(missing)} (or give --spec)"])
    profits = args.profits
    if args.profit_kind == "explicit" and profits is not None:
        m = args.m
        profits = [profits[i:i + m] for i in range(0, len(profits), m)]
    spec = InstanceSpec(args.K, args.m, args.a, args.d, args.c, args.B, args.alpha,
                        args.profit_kind, profits)
    return generate_instance(spec)


def _fmt(v) -> str:
    return "NA" if v is None else f"{v:.17g}" if isinstance(v, float) else str(v)


def _target(inst, kind: str):
    if kind == "oracle":
        return analysis.brute_force_optimum(inst).optimum_fitness
    if kind == "closed-form":
        return closed_form_target(inst)
    return None


def cmd_run(args) -> int:
    inst = _instance(args)
    budget = int(expr.evaluate(args.budget, n=inst.n))
    cfg = AlgorithmConfig(args.algo, args.seed, budget, init=args.init)
    target = _target(inst, args.target)
    rec = run(inst, cfg, target, stop_when_feasible=args.target == "feasible")
    print(f"algorithm      {args.algo}")
    print(f"n              {inst.n}")
    print(f"seed           {rec.seed}")
    print(f"t_feasible     {_fmt(rec.t_feasible)}")
    print(f"t_optimal      {_fmt(rec.t_optimal)}")
    print(f"evaluations    {rec.evaluations}")
    if target is not None:
        print(f"target         ({_fmt(target.penalized_profit)}, {_fmt(target.penalized_beta)})")
    f = rec.final_fitness
    print(f"final_fitness  ({_fmt(f.penalized_profit)}, {_fmt(f.penalized_beta)})")
    print(f"final_solution {rec.final_solution}")
    return 0


def cmd_experiment(args) -> int:
    spec = load_experiment_spec(args.spec)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.algo is not None:
        overrides["algorithms"] = ALGOS[args.algo]
    if args.budget is not None:
        overrides["budget"] = args.budget
    if args.target is not None:
        overrides["target"] = args.target
    if overrides:
        data = spec.to_dict()
        data.update(overrides)
        spec = ExperimentSpec.from_dict(data)
    rows = run_experiment(spec, workers=args.workers)
    if args.out:
        write_csv(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(rows_to_csv(rows))
    if args.summary:
        print(format_report(scaling_summary(rows)), file=sys.stderr)
    return 0


def _level_table(levels) -> list[str]:
    out = ["level  balanced     unbalanced   bound          feasible"]
    for s in levels:
        b = s.feasible_covariance_bound
        bound = "NA" if b is None else f"{b:.6g}"
        out.append(f"{s.level:<6d} {s.balanced_covariance:<12.6g} "
                   f"{s.most_unbalanced_covariance:<12.6g} {bound:<14s} "
                   f"{'yes' if s.level_feasible else 'no'}")
    return out


def cmd_oracle(args) -> int:
    inst = _instance(args)
    res = analysis.brute_force_optimum(inst, exact=args.exact)
    f = res.optimum_fitness
    print(f"optimum_fitness ({_fmt(float(f.penalized_profit))}, {_fmt(float(f.penalized_beta))})")
    print(f"maximizers      {len(res.optimum_masks)}")
    print(f"r               {res.max_feasible_level}")
    for x in res.optimum_solutions[:args.show]:
        print(f"  {x}")
    print("\n".join(_level_table(res.per_level)))
    return 0


def cmd_levels(args) -> int:
    inst = _instance(args)
    print(f"r = {analysis.max_feasible_level(inst)}")
    print("\n".join(_level_table(analysis.level_summaries(inst))))
    return 0


def cmd_summary(args) -> int:
    rows = read_csv(args.csv)
    print(format_report(scaling_summary(rows, min_trials=args.min_trials)))
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(args.instances, args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cckp",
        description="Chance-constrained knapsack with correlated uniform weights: RLS and (1+1) EA.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one trajectory and print its record")
    _add_instance_args(p)
    p.add_argument("--algo", choices=("rls", "ea"), default="rls")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", default="1000000", help="evaluation budget, may use n")
    p.add_argument("--target", choices=TARGETS + ("none",), default="closed-form")
    p.add_argument("--init", choices=[i.value for i in Init if i is not Init.GIVEN],
                   default="uniform_random")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("experiment", help="run a batch of trials and write CSV")
    p.add_argument("--spec", required=True, help="experiment file (JSON)")
    p.add_argument("--out", help="CSV path (stdout if absent)")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--trials", type=int)
    p.add_argument("--algo", choices=tuple(ALGOS))
    p.add_argument("--budget", help="budget expression in n, e.g. '10*n**3*log(n)'")
    p.add_argument("--target", choices=TARGETS)
    p.add_argument("--workers", type=int, help="worker processes (default $CCKP_WORKERS or 1)")
    p.add_argument("--summary", action="store_true", help="print a scaling summary to stderr")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="brute-force optimum of a small instance")
    _add_instance_args(p)
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.add_argument("--show", type=int, default=5, help="maximizers to print")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("levels", help="per-level covariance table")
    _add_instance_args(p)
    p.set_defaults(func=cmd_levels)

    p = sub.add_parser("summary", help="scaling summary of an experiment CSV")
    p.add_argument("csv")
    p.add_argument("--min-trials", type=int, default=30)
    p.set_defaults(func=cmd_summary)

    p = sub.add_parser("selftest", help="invariant checks on random small instances")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InstanceSpecError, OracleGuardError, UnsupportedInstanceError,
            InsufficientDataError, ValueError, OSError) as exc:
        print(f"cckp: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())
