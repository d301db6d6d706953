"""Level structure, covariance extremes per level and brute-force oracles."""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from cckp.model import (
    FitnessValue,
    ProblemInstance,
    Solution,
    beta_from_counts,
    betas_tied,
    fitness,
    fitness_compare,
    is_surrogate_feasible,
    Ordering,
)

ORACLE_MAX_N = 24
EXACT_ORACLE_MAX_N = 16


class DomainError(ValueError):
    pass


class OracleGuardError(ValueError):
    pass


class LevelClass(str, enum.Enum):
    S_GAMMA = "S_gamma"
    S_ZETA = "S_zeta"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LevelSummary:
    level: int
    balanced_covariance: float
    most_unbalanced_covariance: float
    # None where the expected weight already reaches the budget.
    feasible_covariance_bound: Optional[float]
    level_feasible: bool


def _check_level(inst: ProblemInstance, level: int) -> None:
    if not 0 <= level <= inst.n:
        raise DomainError(f"level {level} outside 0..{inst.n}")


def balanced_counts(inst: ProblemInstance, level: int) -> tuple[int, ...]:
    """Group counts of the balanced solution; the first groups take the extra items."""
    _check_level(inst, level)
    q, t = divmod(level, inst.groups)
    if q + (t > 0) > inst.group_size:
        raise DomainError(f"no balanced solution with {level} items fits groups of {inst.group_size}")
    return (q + 1,) * t + (q,) * (inst.groups - t)


def balanced_solution(inst: ProblemInstance, level: int) -> Solution:
    """Balanced solution taking the leading positions of each group."""
    counts = balanced_counts(inst, level)
    return Solution.from_items(inst, ((i, j) for i, r in enumerate(counts) for j in range(r)))


def balanced_covariance(inst: ProblemInstance, level: int, exact: bool = False):
    q, t = divmod(level, inst.groups)
    balanced_counts(inst, level)
    pairs = (inst.groups - t) * q * (q - 1) + t * (q + 1) * q
    return (Fraction(inst.covariance) if exact else inst.covariance) * pairs


def most_unbalanced_covariance(inst: ProblemInstance, level: int, exact: bool = False):
    _check_level(inst, level)
    m = inst.group_size
    full, rem = divmod(level, m)
    pairs = full * m * (m - 1) + rem * (rem - 1)
    return (Fraction(inst.covariance) if exact else inst.covariance) * pairs


def feasible_covariance_bound(inst: ProblemInstance, level: int, exact: bool = False):
    """Largest covariance term a level-``level`` solution may have and stay feasible."""
    _check_level(inst, level)
    if exact:
        a, d, budget, alpha = (Fraction(v) for v in (
            inst.expected_weight, inst.variance, inst.budget, inst.tolerance))
    else:
        a, d, budget, alpha = inst.expected_weight, inst.variance, inst.budget, inst.tolerance
    if a * level >= budget:
        raise DomainError(f"expected weight {a * level} reaches the budget {budget}")
    slack = budget - a * level
    return slack * slack * alpha / (1 - alpha) - level * d


def level_is_feasible(inst: ProblemInstance, level: int, exact: bool = False) -> bool:
    """Whether some solution with ``level`` items is surrogate-feasible.

    The balanced solution has the least covariance at its level, so it is
    the only witness that needs checking.
    """
    q, t = divmod(level, inst.groups)
    balanced_counts(inst, level)
    pairs = (inst.groups - t) * q * (q - 1) + t * (q + 1) * q
    alpha = Fraction(inst.tolerance) if exact else inst.tolerance
    return beta_from_counts(inst, level, pairs, exact) <= alpha


def max_feasible_level(inst: ProblemInstance, exact: bool = False) -> int:
    return max(l for l in range(inst.n + 1) if level_is_feasible(inst, l, exact))


def level_summary(inst: ProblemInstance, level: int) -> LevelSummary:
    try:
        bound = feasible_covariance_bound(inst, level)
    except DomainError:
        bound = None
    return LevelSummary(
        level=level,
        balanced_covariance=balanced_covariance(inst, level),
        most_unbalanced_covariance=most_unbalanced_covariance(inst, level),
        feasible_covariance_bound=bound,
        level_feasible=level_is_feasible(inst, level),
    )


def level_summaries(inst: ProblemInstance) -> list[LevelSummary]:
    return [level_summary(inst, l) for l in range(inst.n + 1)]


def classify_level_member(inst: ProblemInstance, x: Solution) -> LevelClass:
    if not is_surrogate_feasible(inst, x):
        return LevelClass.INFEASIBLE
    for k, b in enumerate(x.bits):
        if not b and is_surrogate_feasible(inst, x.flipped((k,))):
            return LevelClass.S_ZETA
    return LevelClass.S_GAMMA


# -- enumeration ------------------------------------------------------------


def _popcount_table(bits: int) -> np.ndarray:
    table = np.zeros(1 << bits, dtype=np.uint8)
    for b in range(bits):
        table[1 << b:1 << (b + 1)] = table[:1 << b] + 1
    return table


def enumerate_counts(inst: ProblemInstance, start: int = 0, stop: Optional[int] = None):
    """Group-count matrix (``K x N``) for the masks ``start..stop-1``.

    Bit ``k`` of a mask selects the item with flat index ``k``.
    """
    if inst.n > ORACLE_MAX_N:
        raise OracleGuardError(f"n={inst.n} exceeds the enumeration guard {ORACLE_MAX_N}")
    stop = (1 << inst.n) if stop is None else stop
    masks = np.arange(start, stop, dtype=np.int64)
    m = inst.group_size
    table = _popcount_table(m)
    low = (1 << m) - 1
    counts = np.stack(
        [table[(masks >> (g * m)) & low] for g in range(inst.groups)]).astype(np.int64)
    return masks, counts


def mask_to_solution(inst: ProblemInstance, mask: int) -> Solution:
    return Solution.from_bits(inst, ((int(mask) >> k) & 1 for k in range(inst.n)))


@dataclass
class OracleResult:
    optimum_fitness: FitnessValue
    optimum_masks: np.ndarray
    max_feasible_level: int
    per_level: list[LevelSummary]
    instance: ProblemInstance

    @property
    def optimum_solutions(self) -> list[Solution]:
        return [mask_to_solution(self.instance, mk) for mk in self.optimum_masks]


_CHUNK = 1 << 18


def brute_force_optimum(inst: ProblemInstance, exact: bool = False) -> OracleResult:
    """Enumerate all ``2**n`` solutions and return the lexicographic optimum."""
    if exact:
        return _brute_force_exact(inst)
    if inst.n > ORACLE_MAX_N:
        raise OracleGuardError(f"n={inst.n} exceeds the oracle guard {ORACLE_MAX_N}")
    n, alpha = inst.n, inst.tolerance
    units = inst.profit_units
    dtype = np.int64 if sum(units) < 2**62 else object
    unit_arr = np.array(units, dtype=dtype)
    beta_cache: dict[tuple[int, int], float] = {}
    pair_cap = inst.group_size * inst.group_size * inst.groups + 1

    best_key = None
    best_beta = None
    best_masks: list[np.ndarray] = []
    level_feasible = [False] * (n + 1)

    for start in range(0, 1 << n, _CHUNK):
        masks, counts = enumerate_counts(inst, start, min(start + _CHUNK, 1 << n))
        ones = counts.sum(axis=0)
        pairs = (counts * (counts - 1)).sum(axis=0)
        code = ones * pair_cap + pairs
        uniq, inverse = np.unique(code, return_inverse=True)
        ub = np.empty(len(uniq))
        for i, cd in enumerate(uniq.tolist()):
            key = divmod(cd, pair_cap)
            if key not in beta_cache:
                beta_cache[key] = beta_from_counts(inst, *key)
            ub[i] = beta_cache[key]
        beta = ub[inverse.ravel()]
        feasible = beta <= alpha
        for l in np.unique(ones[feasible]).tolist():
            level_feasible[l] = True

        total = np.zeros(len(masks), dtype=dtype)
        for k in range(n):
            total = total + ((masks >> k) & 1).astype(dtype) * unit_arr[k]
        pkey = np.where(feasible, total, -1)
        chunk_key = pkey.max()
        if best_key is not None and chunk_key < best_key:
            continue
        sel = pkey == chunk_key
        chunk_beta = beta[sel].min()
        if best_key is None or chunk_key > best_key:
            best_key, best_beta, best_masks = chunk_key, chunk_beta, []
        else:
            best_beta = min(best_beta, chunk_beta)
        best_masks.append(np.column_stack([masks[sel], beta[sel]]))

    cand = np.concatenate(best_masks)
    keep = [betas_tied(b, best_beta) for b in cand[:, 1].tolist()]
    opt_masks = np.sort(cand[np.array(keep), 0].astype(np.int64))
    witness = int(cand[cand[:, 1] == best_beta, 0][0])
    best = fitness(inst, mask_to_solution(inst, witness))
    r = max(l for l in range(n + 1) if level_feasible[l])
    per_level = [
        _with_feasibility(level_summary(inst, l), level_feasible[l]) for l in range(n + 1)
    ]
    return OracleResult(best, opt_masks, r, per_level, inst)


def _with_feasibility(summary: LevelSummary, feasible: bool) -> LevelSummary:
    return LevelSummary(
        summary.level, summary.balanced_covariance, summary.most_unbalanced_covariance,
        summary.feasible_covariance_bound, feasible,
    )


def _brute_force_exact(inst: ProblemInstance) -> OracleResult:
    if inst.n > EXACT_ORACLE_MAX_N:
        raise OracleGuardError(
            f"n={inst.n} exceeds the exact oracle guard {EXACT_ORACLE_MAX_N}")
    n = inst.n
    best = None
    best_masks: list[int] = []
    level_feasible = [False] * (n + 1)
    for mask, bits in enumerate(itertools.product((0, 1), repeat=n)):
        x = Solution.from_bits(inst, reversed(bits))
        fx = fitness(inst, x, exact=True)
        if fx.penalized_profit >= 0:
            level_feasible[x.ones] = True
        order = Ordering.GREATER if best is None else fitness_compare(fx, best, rtol=0)
        if order is Ordering.GREATER:
            best, best_masks = fx, [mask]
        elif order is Ordering.EQUAL:
            best_masks.append(mask)
    r = max(l for l in range(n + 1) if level_feasible[l])
    per_level = [
        _with_feasibility(level_summary(inst, l), level_feasible[l]) for l in range(n + 1)
    ]
    return OracleResult(best, np.array(best_masks, dtype=np.int64), r, per_level, inst)


# -- profit profiles --------------------------------------------------------


def profit_profile(inst: ProblemInstance, x: Solution) -> Counter:
    """Multiset of the profits selected by ``x``."""
    return Counter(p for p, b in zip(inst.flat_profits, x.bits) if b)


def top_profile(inst: ProblemInstance, j: int) -> Counter:
    if not 0 <= j <= inst.n:
        raise DomainError(f"j={j} outside 0..{inst.n}")
    return Counter(sorted(inst.flat_profits, reverse=True)[:j])


def profile_contains(profile: Counter, j: int, inst: ProblemInstance) -> bool:
    """Whether ``profile`` contains the ``j`` largest profits of the instance."""
    return all(profile[v] >= c for v, c in top_profile(inst, j).items())
