"""Instance specifications, instance files and the structural optimum."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from cckp.analysis import balanced_counts, max_feasible_level
from cckp.model import FitnessValue, ProblemInstance, beta_from_counts

PROFIT_KINDS = ("uniform", "mirrored", "explicit")


class InstanceSpecError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid instance spec: " + "; ".join(problems))
        self.problems = problems


class UnsupportedInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    K: int
    m: int
    a: float
    d: float
    c: float
    B: float
    alpha: float
    profit_kind: str = "uniform"
    # Length-m list for "mirrored", K x m matrix for "explicit", unused for "uniform".
    profits: Optional[Any] = field(default=None)

    def problems(self) -> list[str]:
        out = []
        for name in ("K", "m"):
            v = getattr(self, name)
            if not (isinstance(v, int) and not isinstance(v, bool) and v >= 1):
                out.append(f"{name} must be a positive integer, got {v!r}")
        for name in ("a", "d", "c", "B"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0):
                out.append(f"{name} must be a real > 0, got {v!r}")
        if not (isinstance(self.alpha, (int, float)) and 0 < self.alpha < 1):
            out.append(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.profit_kind not in PROFIT_KINDS:
            out.append(f"profit_kind must be one of {PROFIT_KINDS}, got {self.profit_kind!r}")
        elif self.profit_kind == "mirrored":
            vals = self.profits
            if not isinstance(vals, (list, tuple)) or (isinstance(self.m, int) and len(vals) != self.m):
                out.append(f"mirrored profits must be a list of m={self.m} values")
            elif any(not isinstance(p, (int, float)) or p < 0 for p in vals):
                out.append("mirrored profits must be non-negative reals")
            elif any(p < q for p, q in zip(vals, vals[1:])):
                out.append(f"mirrored profits must be nonincreasing, got {list(vals)}")
        elif self.profit_kind == "explicit":
            rows = self.profits
            if (not isinstance(rows, (list, tuple)) or len(rows) != self.K
                    or any(not isinstance(r, (list, tuple)) or len(r) != self.m for r in rows)):
                out.append(f"explicit profits must be a {self.K}x{self.m} matrix")
            elif any(not isinstance(p, (int, float)) or p < 0 for r in rows for p in r):
                out.append("explicit profits must be non-negative reals")
        elif self.profits is not None:
            out.append("uniform profits take no profit values")
        return out

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("K", "m", "a", "d", "c", "B", "alpha", "profit_kind")}
        if self.profits is not None:
            out["profits"] = [list(r) if isinstance(r, (list, tuple)) else r for r in self.profits]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSpec":
        allowed = {"K", "m", "a", "d", "c", "B", "alpha", "profit_kind", "profits"}
        unknown = set(data) - allowed
        missing = {"K", "m", "a", "d", "c", "B", "alpha"} - set(data)
        problems = [f"unknown field {k!r}" for k in sorted(unknown)]
        problems += [f"missing field {k!r}" for k in sorted(missing)]
        if problems:
            raise InstanceSpecError(problems)
        return cls(**data)


def generate_instance(spec: InstanceSpec) -> ProblemInstance:
    problems = spec.problems()
    if problems:
        raise InstanceSpecError(problems)
    if spec.profit_kind == "uniform":
        profits = [[1.0] * spec.m for _ in range(spec.K)]
    elif spec.profit_kind == "mirrored":
        profits = [list(spec.profits) for _ in range(spec.K)]
    else:
        profits = [list(r) for r in spec.profits]
    return ProblemInstance(spec.K, spec.m, float(spec.a), float(spec.d), float(spec.c),
                           float(spec.B), float(spec.alpha), profits)


def load_instance_spec(path: Union[str, Path]) -> InstanceSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceSpecError([f"malformed instance file {path}: {exc}"]) from exc
    if not isinstance(data, dict):
        raise InstanceSpecError([f"instance file {path} must hold an object"])
    return InstanceSpec.from_dict(data)


def save_instance_spec(spec: InstanceSpec, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")


def has_shared_profits(inst: ProblemInstance) -> bool:
    first = inst.profits[0]
    return all(row == first for row in inst.profits)


def closed_form_target(inst: ProblemInstance) -> FitnessValue:
    """Fitness of the optimum for instances whose groups share one profit list.

    The optimum takes the ``r`` globally largest profits (``r`` the highest
    feasible level) and, among solutions with that profit, the fewest items
    in balanced positions.  With zero profits present, dropping a zero-profit
    item keeps the profit and lowers the surrogate, hence the smallest level
    ``l <= r`` whose top-``l`` profit already equals the top-``r`` profit.
    """
    if not has_shared_profits(inst):
        raise UnsupportedInstanceError(
            "closed-form optimum needs every group to share the same profit list")
    r = max_feasible_level(inst)
    # Groups share one list, so the global order repeats each position K times.
    row_units = sorted(inst.profit_units[:inst.group_size], reverse=True)
    ranked = [u for u in row_units for _ in range(inst.groups)]
    prefix = [0]
    for u in ranked:
        prefix.append(prefix[-1] + u)
    best = prefix[r]
    level = next(l for l in range(r + 1) if prefix[l] == best)
    pairs = sum(k * (k - 1) for k in balanced_counts(inst, level))
    return FitnessValue(inst.profit_from_units(best), beta_from_counts(inst, level, pairs))
