"""Randomized invariant checks on small instances, run by ``cckp selftest``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from cckp import analysis, model
from cckp.algorithms import AlgorithmConfig, child_seed, run
from cckp.harness.instances import closed_form_target
from cckp.model import Ordering, ProblemInstance


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_instance(rng: np.random.Generator, max_groups: int = 4, max_size: int = 4,
                    profit_kind: str = "uniform") -> ProblemInstance:
    """Small instance whose feasible region is neither empty nor everything."""
    K = int(rng.integers(1, max_groups + 1))
    m = int(rng.integers(1, max_size + 1))
    n = K * m
    a = float(rng.uniform(0.5, 2.0))
    d = float(rng.uniform(0.2, 2.0))
    c = float(rng.uniform(0.05, 1.0))
    B = float(a * rng.uniform(1.0, n + 1.0))
    alpha = float(rng.uniform(0.05, 0.95))
    if profit_kind == "uniform":
        profits = [[1.0] * m] * K
    elif profit_kind == "mirrored":
        row = sorted((float(v) for v in rng.integers(1, 20, m)), reverse=True)
        profits = [row] * K
    else:
        profits = rng.uniform(0, 10, (K, m)).tolist()
    return ProblemInstance(K, m, a, d, c, B, alpha, profits)


def _all_solutions(inst: ProblemInstance):
    for mask in range(1 << inst.n):
        yield analysis.mask_to_solution(inst, mask)


def check_moments(rng) -> str:
    inst = random_instance(rng, 3, 3)
    for x in _all_solutions(inst):
        sel = x.selected()
        oracle = sum(inst.variance if k == l else inst.covariance
                     for k in sel for l in sel if inst.group_of[k] == inst.group_of[l])
        got = model.weight_variance(inst, x)
        if abs(got - oracle) > 1e-12 * max(1.0, abs(oracle)):
            raise AssertionError(f"variance {got} != quadratic form {oracle} for {x}")
    return f"n={inst.n}"


def check_bound(rng) -> str:
    inst = random_instance(rng, 3, 4)
    for x in _all_solutions(inst):
        if inst.expected_weight * x.ones >= inst.budget:
            continue
        lhs = model.is_surrogate_feasible(inst, x)
        rhs = model.covariance_term(inst, x) <= analysis.feasible_covariance_bound(inst, x.ones)
        if lhs != rhs:
            raise AssertionError(f"feasibility {lhs} but bound check {rhs} for {x}")
    return f"n={inst.n}"


def check_levels(rng) -> str:
    inst = random_instance(rng, 4, 4)
    for x in _all_solutions(inst):
        s = model.covariance_term(inst, x)
        lo = analysis.balanced_covariance(inst, x.ones)
        hi = analysis.most_unbalanced_covariance(inst, x.ones)
        if not lo <= s <= hi:
            raise AssertionError(f"covariance {s} outside [{lo}, {hi}] for {x}")
    return f"n={inst.n}"


def check_closed_form(rng) -> str:
    kind = "uniform" if rng.integers(2) else "mirrored"
    inst = random_instance(rng, 4, 4, kind)
    oracle = analysis.brute_force_optimum(inst)
    closed = closed_form_target(inst)
    if model.fitness_compare(oracle.optimum_fitness, closed) is not Ordering.EQUAL:
        raise AssertionError(f"closed form {closed} != oracle {oracle.optimum_fitness}")
    if oracle.max_feasible_level != analysis.max_feasible_level(inst):
        raise AssertionError("max feasible level disagrees with enumeration")
    return f"{kind} n={inst.n}"


def check_runs(rng) -> str:
    inst = random_instance(rng, 3, 4, "mirrored")
    if inst.n < 2:
        return "skipped n<2"
    target = analysis.brute_force_optimum(inst).optimum_fitness
    for kind in ("rls", "ea"):
        seen = []
        cfg = AlgorithmConfig(kind, child_seed(int(rng.integers(2**32)), 0), 10**5, verify=True)
        rec = run(inst, cfg, target, observer=lambda t, x, f: seen.append(f))
        for f0, f1 in zip(seen, seen[1:]):
            if model.fitness_compare(f1, f0) is Ordering.LESS:
                raise AssertionError(f"{kind}: accepted fitness decreased {f0} -> {f1}")
        if rec.t_optimal is None:
            raise AssertionError(f"{kind}: optimum not reached within budget")
    return f"n={inst.n}"


CHECKS: dict[str, Callable] = {
    "moment consistency": check_moments,
    "feasibility bound": check_bound,
    "balanced/unbalanced covariance": check_levels,
    "closed-form optimum": check_closed_form,
    "run monotonicity and hitting": check_runs,
}


def run_selftest(instances: int = 10, seed: int = 0) -> list[CheckResult]:
    results = []
    for name, check in CHECKS.items():
        rng = np.random.default_rng([seed, len(results)])
        try:
            details = [check(rng) for _ in range(instances)]
        except AssertionError as exc:
            results.append(CheckResult(name, False, str(exc)))
        else:
            results.append(CheckResult(name, True, f"{len(details)} instances"))
    return results

