"""Batches of seeded trials over a size sweep, emitted as CSV."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from cckp.algorithms import Algorithm, AlgorithmConfig, Init, child_seed, run
from cckp.analysis import ORACLE_MAX_N, OracleGuardError, brute_force_optimum
from cckp.harness import expr
from cckp.harness.instances import InstanceSpec, InstanceSpecError, closed_form_target, generate_instance
from cckp.model import FitnessValue, ProblemInstance

CSV_COLUMNS = (
    "algorithm", "K", "m", "n", "trial", "seed", "t_feasible", "t_optimal",
    "evaluations", "final_profit", "final_beta", "target_profit", "target_beta", "censored",
)
TARGETS = ("feasible", "oracle", "closed-form")
WORKERS_ENV = "CCKP_WORKERS"

# Growth models g(n) for budgets and scaling fits.
MODELS = {
    "n log n": lambda n: n * math.log(n),
    "n^2": lambda n: n**2,
    "n^2 log n": lambda n: n**2 * math.log(n),
    "n^3": lambda n: n**3,
    "n^3 log n": lambda n: n**3 * math.log(n),
}


def proven_model(algorithm: str, target: str) -> str:
    """Growth model of the proven upper bound for a setting."""
    algorithm = Algorithm(algorithm)
    if target == "feasible":
        return "n log n" if algorithm is Algorithm.RLS else "n^2 log n"
    return "n^3" if algorithm is Algorithm.RLS else "n^3 log n"


_MODEL_EXPR = {
    "n log n": "n*log(n)",
    "n^2": "n**2",
    "n^2 log n": "n**2*log(n)",
    "n^3": "n**3",
    "n^3 log n": "n**3*log(n)",
}


def default_budget(algorithm: str, target: str) -> str:
    return "10*" + _MODEL_EXPR[proven_model(algorithm, target)]


@dataclass(frozen=True)
class ExperimentSpec:
    """A sweep of (K, m) sizes over one instance template.

    ``template`` holds the InstanceSpec fields other than ``K`` and ``m``;
    numeric fields may be expressions in ``K``, ``m`` and ``n`` (e.g.
    ``"B": "2*K"``) and mirrored profit lists may be given as an expression
    in the 1-based position ``j`` (e.g. ``"profits": "m - j + 1"``).
    """

    template: dict
    sizes: tuple[tuple[int, int], ...]
    algorithms: tuple[str, ...] = ("rls", "ea")
    trials: int = 30
    master_seed: int = 0
    budget: Optional[str] = None
    target: str = "feasible"
    init: str = "uniform_random"

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple((int(k), int(m)) for k, m in self.sizes))
        object.__setattr__(self, "algorithms", tuple(Algorithm(a).value for a in self.algorithms))
        problems = []
        if not self.sizes:
            problems.append("sizes must not be empty")
        if self.trials < 1:
            problems.append("trials must be positive")
        if self.target not in TARGETS:
            problems.append(f"target must be one of {TARGETS}, got {self.target!r}")
        try:
            Init(self.init)
        except ValueError:
            problems.append(f"unknown init {self.init!r}")
        if self.init == Init.GIVEN.value:
            problems.append("init 'given' is not available for sweeps")
        if not 0 <= self.master_seed < 2**64:
            problems.append("master_seed must be an unsigned 64-bit integer")
        if problems:
            raise InstanceSpecError(problems)

    def instance_spec(self, K: int, m: int) -> InstanceSpec:
        names = {"K": K, "m": m, "n": K * m}
        fields = {"K": K, "m": m}
        for key, value in self.template.items():
            if key in ("K", "m"):
                raise InstanceSpecError([f"template must not fix {key!r}; use sizes"])
            if key == "profits" and isinstance(value, str):
                value = [float(expr.evaluate(value, j=j, **names)) for j in range(1, m + 1)]
            elif key in ("a", "d", "c", "B", "alpha"):
                value = float(expr.evaluate(value, **names))
            fields[key] = value
        return InstanceSpec.from_dict(fields)

    def budget_for(self, algorithm: str, n: int) -> int:
        rule = self.budget or default_budget(algorithm, self.target)
        return max(1, int(math.ceil(expr.evaluate(rule, n=n))))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        if "instance" in data:
            data["template"] = data.pop("instance")
        allowed = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - allowed
        if unknown:
            raise InstanceSpecError([f"unknown experiment field {k!r}" for k in sorted(unknown)])
        data["sizes"] = tuple(tuple(s) for s in data.get("sizes", ()))
        if "algorithms" in data:
            data["algorithms"] = tuple(data["algorithms"])
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "instance": self.template, "sizes": [list(s) for s in self.sizes],
            "algorithms": list(self.algorithms), "trials": self.trials,
            "master_seed": self.master_seed, "budget": self.budget,
            "target": self.target, "init": self.init,
        }


def load_experiment_spec(path: Union[str, Path]) -> ExperimentSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceSpecError([f"malformed experiment file {path}: {exc}"]) from exc
    return ExperimentSpec.from_dict(data)


@dataclass(frozen=True)
class ExperimentRow:
    algorithm: str
    K: int
    m: int
    n: int
    trial: int
    seed: int
    t_feasible: Optional[int]
    t_optimal: Optional[int]
    evaluations: int
    final_profit: float
    final_beta: float
    target_profit: Optional[float]
    target_beta: Optional[float]
    censored: bool
    target: str = field(default="feasible", compare=False)

    @property
    def hitting_time(self) -> Optional[int]:
        return self.t_feasible if self.target == "feasible" else self.t_optimal

    def csv_fields(self) -> list[str]:
        def num(v):
            return "NA" if v is None else format(v, ".17g")

        def count(v):
            return "NA" if v is None else str(v)

        return [
            self.algorithm, str(self.K), str(self.m), str(self.n), str(self.trial),
            str(self.seed), count(self.t_feasible), count(self.t_optimal),
            str(self.evaluations), num(self.final_profit), num(self.final_beta),
            num(self.target_profit), num(self.target_beta), str(int(self.censored)),
        ]


def _target_fitness(inst: ProblemInstance, target: str) -> Optional[FitnessValue]:
    if target == "oracle":
        return brute_force_optimum(inst).optimum_fitness
    if target == "closed-form":
        return closed_form_target(inst)
    return None


def _run_trial(task) -> ExperimentRow:
    inst, algorithm, K, m, trial, seed, budget, init, target_kind, target = task
    cfg = AlgorithmConfig(algorithm, seed, budget, init=init)
    rec = run(inst, cfg, target, stop_when_feasible=target is None)
    hit = rec.t_feasible if target is None else rec.t_optimal
    return ExperimentRow(
        algorithm=algorithm, K=K, m=m, n=inst.n, trial=trial, seed=seed,
        t_feasible=rec.t_feasible, t_optimal=rec.t_optimal, evaluations=rec.evaluations,
        final_profit=rec.final_fitness.penalized_profit,
        final_beta=rec.final_fitness.penalized_beta,
        target_profit=None if target is None else target.penalized_profit,
        target_beta=None if target is None else target.penalized_beta,
        censored=hit is None, target=target_kind,
    )


def default_workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> list[ExperimentRow]:
    """Run every (size, algorithm, trial) and return rows in canonical order.

    Seeds derive from ``(master_seed, K, m, trial)``, so both algorithms see
    the same seed for a given trial and results do not depend on scheduling.
    """
    if spec.target == "oracle":
        too_big = [K * m for K, m in spec.sizes if K * m > ORACLE_MAX_N]
        if too_big:
            raise OracleGuardError(
                f"oracle target needs n <= {ORACLE_MAX_N}, sweep contains n={too_big}")
    tasks = []
    for K, m in spec.sizes:
        inst = generate_instance(spec.instance_spec(K, m))
        target = _target_fitness(inst, spec.target)
        for algorithm in spec.algorithms:
            budget = spec.budget_for(algorithm, inst.n)
            for trial in range(spec.trials):
                seed = child_seed(spec.master_seed, K, m, trial)
                tasks.append((inst, algorithm, K, m, trial, seed, budget, spec.init,
                              spec.target, target))
    workers = default_workers() if workers is None else workers
    if workers <= 1:
        rows = [_run_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_trial, tasks, chunksize=4))
    order = {(K, m): i for i, (K, m) in enumerate(spec.sizes)}
    algos = {a: i for i, a in enumerate(spec.algorithms)}
    rows.sort(key=lambda r: (order[(r.K, r.m)], algos[r.algorithm], r.trial))
    return rows


def rows_to_csv(rows: Sequence[ExperimentRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def write_csv(rows: Sequence[ExperimentRow], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path: Union[str, Path]) -> list[ExperimentRow]:
    """Parse a results CSV; rows without target columns count as feasibility runs."""
    def opt_int(v):
        return None if v == "NA" else int(v)

    def opt_float(v):
        return None if v == "NA" else float(v)

    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            ExperimentRow(
                algorithm=r["algorithm"], K=int(r["K"]), m=int(r["m"]), n=int(r["n"]),
                trial=int(r["trial"]), seed=int(r["seed"]),
                t_feasible=opt_int(r["t_feasible"]), t_optimal=opt_int(r["t_optimal"]),
                evaluations=int(r["evaluations"]), final_profit=float(r["final_profit"]),
                final_beta=float(r["final_beta"]), target_profit=opt_float(r["target_profit"]),
                target_beta=opt_float(r["target_beta"]), censored=r["censored"] == "1",
                target="feasible" if r["target_profit"] == "NA" else "optimum",
            )
            for r in reader
        ]
