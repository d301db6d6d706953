"""Problem instance, solutions and the Chebyshev-surrogate fitness.

Items are laid out group-major: item ``(i, j)`` (group ``i``, position ``j``)
has flat index ``i * group_size + j``.  Every quantity derived from the
weights depends on a solution only through two integers, the number of
selected items ``ones`` and ``pair_sum = sum_i r_i (r_i - 1)`` over the
per-group selection counts ``r_i``.  Computing the floating-point surrogate
from that pair alone makes it independent of the path that produced a
solution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable

import numpy as np

#: Relative tolerance under which two surrogate values compare equal.
BETA_TIE_RTOL = 1e-12


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class ProblemInstance:
    """Chance-constrained knapsack with ``groups`` groups of ``group_size`` items.

    All items share expected weight, variance and (within a group) pairwise
    covariance; weights in different groups are uncorrelated.
    """

    groups: int
    group_size: int
    expected_weight: float
    variance: float
    covariance: float
    budget: float
    tolerance: float
    profits: tuple[tuple[float, ...], ...] = field(repr=False)

    def __post_init__(self):
        rows = tuple(tuple(float(p) for p in row) for row in self.profits)
        object.__setattr__(self, "profits", rows)
        problems = []
        if not (isinstance(self.groups, (int, np.integer)) and self.groups >= 1):
            problems.append(f"groups must be a positive integer, got {self.groups!r}")
        if not (isinstance(self.group_size, (int, np.integer)) and self.group_size >= 1):
            problems.append(f"group_size must be a positive integer, got {self.group_size!r}")
        for name in ("expected_weight", "variance", "covariance", "budget"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                problems.append(f"{name} must be a finite real > 0, got {value!r}")
        if not 0 < self.tolerance < 1:
            problems.append(f"tolerance must lie in (0, 1), got {self.tolerance!r}")
        if not problems:
            if len(rows) != self.groups or any(len(r) != self.group_size for r in rows):
                problems.append(
                    f"profits must be a {self.groups}x{self.group_size} matrix"
                )
            elif any(not (np.isfinite(p) and p >= 0) for r in rows for p in r):
                problems.append("profits must be finite and non-negative")
        if problems:
            raise ValueError("invalid problem instance: " + "; ".join(problems))

    @property
    def n(self) -> int:
        return self.groups * self.group_size

    @property
    def p_max(self) -> float:
        return max(self.flat_profits)

    @cached_property
    def flat_profits(self) -> tuple[float, ...]:
        return tuple(p for row in self.profits for p in row)

    @cached_property
    def group_of(self) -> tuple[int, ...]:
        return tuple(k // self.group_size for k in range(self.n))

    @cached_property
    def _profit_fixed_point(self) -> tuple[tuple[int, ...], int]:
        # Floats are dyadic rationals, so a common power-of-two denominator
        # turns every profit into an exact integer number of units.
        ratios = [p.as_integer_ratio() for p in self.flat_profits]
        denom = max(den for _, den in ratios)
        return tuple(num * (denom // den) for num, den in ratios), denom

    @cached_property
    def float_params(self) -> tuple[float, float, float, float, float]:
        """``(a, d, c, B, alpha)``."""
        return (self.expected_weight, self.variance, self.covariance, self.budget,
                self.tolerance)

    @cached_property
    def exact_params(self) -> tuple[Fraction, ...]:
        """``(a, d, c, B, alpha)`` as exact rationals of the stored floats."""
        return tuple(Fraction(v) for v in self.float_params)

    @property
    def profit_units(self) -> tuple[int, ...]:
        """Profits as exact integers in units of ``1 / profit_denominator``."""
        return self._profit_fixed_point[0]

    @property
    def profit_denominator(self) -> int:
        return self._profit_fixed_point[1]

    def profit_from_units(self, units: int) -> float:
        # int / int true division is correctly rounded.
        return units / self.profit_denominator

    def with_profits(self, profits) -> "ProblemInstance":
        return ProblemInstance(
            self.groups, self.group_size, self.expected_weight, self.variance,
            self.covariance, self.budget, self.tolerance, profits,
        )

    def scaled_profits(self, factor: float) -> "ProblemInstance":
        return self.with_profits([[p * factor for p in row] for row in self.profits])


@dataclass(frozen=True)
class Solution:
    """A bit vector over the instance's items with cached group counts."""

    bits: tuple[int, ...]
    group_counts: tuple[int, ...]
    ones: int

    def __post_init__(self):
        if self.ones != sum(self.group_counts):
            raise ValueError("ones does not match the group counts")

    @classmethod
    def from_bits(cls, inst: ProblemInstance, bits: Iterable[int]) -> "Solution":
        bits = tuple(int(b) for b in bits)
        if len(bits) != inst.n:
            raise ValueError(f"expected {inst.n} bits, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        m = inst.group_size
        counts = tuple(sum(bits[i * m:(i + 1) * m]) for i in range(inst.groups))
        return cls(bits, counts, sum(counts))

    @classmethod
    def from_items(cls, inst: ProblemInstance, items: Iterable[tuple[int, int]]) -> "Solution":
        """Build a solution selecting the given ``(group, position)`` pairs."""
        bits = [0] * inst.n
        for i, j in items:
            bits[i * inst.group_size + j] = 1
        return cls.from_bits(inst, bits)

    @classmethod
    def zeros(cls, inst: ProblemInstance) -> "Solution":
        return cls((0,) * inst.n, (0,) * inst.groups, 0)

    @classmethod
    def full(cls, inst: ProblemInstance) -> "Solution":
        return cls((1,) * inst.n, (inst.group_size,) * inst.groups, inst.n)

    @property
    def group_size(self) -> int:
        return len(self.bits) // len(self.group_counts)

    def flipped(self, indices: Iterable[int]) -> "Solution":
        """Copy with the given flat indices toggled; duplicates toggle twice."""
        m = self.group_size
        bits = list(self.bits)
        counts = list(self.group_counts)
        for k in indices:
            delta = 1 - 2 * bits[k]
            bits[k] += delta
            counts[k // m] += delta
        return Solution(tuple(bits), tuple(counts), sum(counts))

    def selected(self) -> list[int]:
        return [k for k, b in enumerate(self.bits) if b]

    def __str__(self):
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class FitnessValue:
    """Lexicographic fitness: maximize ``penalized_profit``, then minimize ``penalized_beta``."""

    penalized_profit: float
    penalized_beta: float

    def at_least(self, other: "FitnessValue") -> bool:
        return fitness_compare(self, other) is not Ordering.LESS


def _check(inst: ProblemInstance, x: Solution) -> None:
    if len(x.bits) != inst.n or len(x.group_counts) != inst.groups:
        raise ValueError(
            f"solution of length {len(x.bits)} does not fit an instance with n={inst.n}"
        )


def pair_sum(x: Solution) -> int:
    """``sum_i r_i (r_i - 1)``, twice the number of same-group selected pairs."""
    return sum(r * (r - 1) for r in x.group_counts)


def _params(inst: ProblemInstance, exact: bool):
    return inst.exact_params if exact else inst.float_params


def beta_from_counts(inst: ProblemInstance, ones: int, pairs: int, exact: bool = False):
    """Penalized surrogate for a solution with ``ones`` items and pair sum ``pairs``.

    This is the single place the floating-point value is computed; every
    other path goes through it so equal states give bit-identical values.
    """
    a, d, c, budget, _ = _params(inst, exact)
    mean = a * ones
    if mean >= budget:
        return 1 + mean - budget
    var = d * ones + c * pairs
    slack = budget - mean
    return var / (var + slack * slack)


def expected_weight(inst: ProblemInstance, x: Solution, exact: bool = False):
    _check(inst, x)
    return _params(inst, exact)[0] * x.ones


def covariance_term(inst: ProblemInstance, x: Solution, exact: bool = False):
    _check(inst, x)
    return _params(inst, exact)[2] * pair_sum(x)


def weight_variance(inst: ProblemInstance, x: Solution, exact: bool = False):
    _check(inst, x)
    _, d, c, _, _ = _params(inst, exact)
    return d * x.ones + c * pair_sum(x)


def weight_variance_batch(inst: ProblemInstance, counts, exact: bool = False):
    """Variances of many solutions given as an ``(N, K)`` matrix of group counts.

    Float results are bit-identical to :func:`weight_variance`; exact results
    are a list of Fractions.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 2 or counts.shape[1] != inst.groups:
        raise ValueError(f"counts must have shape (N, {inst.groups})")
    ones = counts.sum(axis=1)
    pairs = (counts * (counts - 1)).sum(axis=1)
    _, d, c, _, _ = _params(inst, exact)
    if not exact:
        return d * ones + c * pairs
    cache: dict[tuple[int, int], Fraction] = {}
    out = []
    for key in zip(ones.tolist(), pairs.tolist()):
        v = cache.get(key)
        if v is None:
            v = cache[key] = d * key[0] + c * key[1]
        out.append(v)
    return out


def chebyshev_surrogate(inst: ProblemInstance, x: Solution, exact: bool = False):
    """One-sided Chebyshev bound on ``Pr(W(x) >= B)``.

    Only defined while the expected weight stays below the budget.
    """
    _check(inst, x)
    a, _, _, budget, _ = _params(inst, exact)
    if a * x.ones >= budget:
        raise ValueError(
            "surrogate undefined: expected weight reaches the budget "
            f"({a * x.ones} >= {budget})"
        )
    return beta_from_counts(inst, x.ones, pair_sum(x), exact)


def penalized_beta(inst: ProblemInstance, x: Solution, exact: bool = False):
    _check(inst, x)
    return beta_from_counts(inst, x.ones, pair_sum(x), exact)


def profit(inst: ProblemInstance, x: Solution, exact: bool = False):
    _check(inst, x)
    units = sum(u for u, b in zip(inst.profit_units, x.bits) if b)
    if exact:
        return Fraction(units, inst.profit_denominator)
    return inst.profit_from_units(units)


def is_surrogate_feasible(inst: ProblemInstance, x: Solution, exact: bool = False) -> bool:
    return penalized_beta(inst, x, exact) <= _params(inst, exact)[4]


def penalized_profit(inst: ProblemInstance, x: Solution, exact: bool = False):
    if not is_surrogate_feasible(inst, x, exact):
        return Fraction(-1) if exact else -1.0
    return profit(inst, x, exact)


def fitness(inst: ProblemInstance, x: Solution, exact: bool = False) -> FitnessValue:
    beta = penalized_beta(inst, x, exact)
    if beta > _params(inst, exact)[4]:
        return FitnessValue(Fraction(-1) if exact else -1.0, beta)
    return FitnessValue(profit(inst, x, exact), beta)


def betas_tied(b1, b2, rtol: float = BETA_TIE_RTOL) -> bool:
    return abs(b1 - b2) <= rtol * max(1, abs(b1), abs(b2))


def fitness_compare(fa: FitnessValue, fb: FitnessValue, rtol: float = BETA_TIE_RTOL) -> Ordering:
    """Lexicographic comparison; ``rtol=0`` gives exact comparison."""
    if fa.penalized_profit != fb.penalized_profit:
        return Ordering.GREATER if fa.penalized_profit > fb.penalized_profit else Ordering.LESS
    ba, bb = fa.penalized_beta, fb.penalized_beta
    if betas_tied(ba, bb, rtol):
        return Ordering.EQUAL
    return Ordering.GREATER if ba < bb else Ordering.LESS
