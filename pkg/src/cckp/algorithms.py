"""RLS and the (1+1) EA on the surrogate fitness, with hitting-time records.

Random streams are numpy ``Generator(PCG64)`` instances.  A trial's seed is
derived from ``(master_seed, *key)`` through ``numpy.random.SeedSequence``,
so runs are reproducible across platforms and independent of scheduling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from cckp.model import (
    BETA_TIE_RTOL,
    FitnessValue,
    Ordering,
    ProblemInstance,
    Solution,
    beta_from_counts,
    fitness,
    fitness_compare,
)

_BLOCK = 4096


class Algorithm(str, enum.Enum):
    RLS = "rls"
    EA = "ea"


class Init(str, enum.Enum):
    UNIFORM_RANDOM = "uniform_random"
    ALL_ONES = "all_ones"
    ALL_ZEROS = "all_zeros"
    GIVEN = "given"


@dataclass(frozen=True)
class AlgorithmConfig:
    kind: Algorithm
    seed: int
    max_evaluations: int
    init: Init = Init.UNIFORM_RANDOM
    initial_bits: Optional[tuple[int, ...]] = None
    record_trajectory: bool = False
    # Recompute the fitness from scratch after every accepted move.
    verify: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Algorithm(self.kind))
        object.__setattr__(self, "init", Init(self.init))
        if self.initial_bits is not None:
            object.__setattr__(self, "initial_bits", tuple(int(b) for b in self.initial_bits))
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if (self.init is Init.GIVEN) != (self.initial_bits is not None):
            raise ValueError("initial_bits must be given exactly when init='given'")

    def validate_for(self, inst: ProblemInstance) -> None:
        if self.kind is Algorithm.RLS and inst.n < 2:
            raise ValueError("RLS needs n >= 2 for its two-bit mutation")
        if self.initial_bits is not None and len(self.initial_bits) != inst.n:
            raise ValueError(
                f"initial_bits has length {len(self.initial_bits)}, instance has n={inst.n}"
            )


@dataclass
class RunRecord:
    seed: int
    t_feasible: Optional[int]
    t_optimal: Optional[int]
    evaluations: int
    final_solution: Solution
    final_fitness: FitnessValue
    trajectory: Optional[list[tuple[int, FitnessValue]]] = field(default=None, repr=False)


def child_seed(master_seed: int, *key: int) -> int:
    """Deterministic 64-bit seed for the stream identified by ``key``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def rls_flips(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    if rng.integers(2) == 0:
        return (int(rng.integers(n)),)
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    if j >= i:
        j += 1
    return (min(i, j), max(i, j))


def ea_flips(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(int(k) for k in np.flatnonzero(rng.random(n) < 1.0 / n))


def rls_mutate(x: Solution, rng: np.random.Generator) -> Solution:
    """Flip one uniform bit, or with probability 1/2 a uniform pair of distinct bits."""
    return x.flipped(rls_flips(len(x.bits), rng))


def ea_mutate(x: Solution, rng: np.random.Generator) -> Solution:
    """Standard bit mutation with rate 1/n."""
    return x.flipped(ea_flips(len(x.bits), rng))


def step(
    inst: ProblemInstance,
    x: Solution,
    fx: FitnessValue,
    cfg: AlgorithmConfig,
    rng: np.random.Generator,
) -> tuple[Solution, FitnessValue, bool]:
    mutate = rls_mutate if cfg.kind is Algorithm.RLS else ea_mutate
    y = mutate(x, rng)
    fy = fitness(inst, y)
    order = fitness_compare(fy, fx)
    if order is Ordering.LESS:
        return x, fx, False
    return y, fy, order is Ordering.GREATER


class _RlsStream:
    """Flip sets for consecutive RLS steps, drawn from ``rng`` in blocks."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self._refill()

    def _refill(self):
        rng, n = self.rng, self.n
        self.branch = rng.integers(0, 2, _BLOCK).tolist()
        self.first = rng.integers(0, n, _BLOCK).tolist()
        self.second = rng.integers(0, n - 1, _BLOCK).tolist()
        self.pos = 0

    def next(self) -> tuple[int, ...]:
        if self.pos == _BLOCK:
            self._refill()
        k = self.pos
        self.pos += 1
        i = self.first[k]
        if self.branch[k] == 0:
            return (i,)
        j = self.second[k]
        if j >= i:
            j += 1
        return (i, j)


class _EaStream:
    """Flip sets for consecutive EA offspring.

    Offspring ``t`` owns positions ``[t*n, (t+1)*n)`` of one long Bernoulli(1/n)
    bit stream; flip positions are generated as geometric gaps.
    """

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self.gaps: list[int] = []
        self.gpos = 0
        self.base = 0
        self.next_flip = self._gap() - 1

    def _gap(self) -> int:
        if self.gpos == len(self.gaps):
            self.gaps = self.rng.geometric(1.0 / self.n, _BLOCK).tolist()
            self.gpos = 0
        g = self.gaps[self.gpos]
        self.gpos += 1
        return g

    def next(self) -> tuple[int, ...]:
        base = self.base
        end = base + self.n
        self.base = end
        if self.next_flip >= end:
            return ()
        flips = []
        while self.next_flip < end:
            flips.append(self.next_flip - base)
            self.next_flip += self._gap()
        return tuple(flips)


def initial_solution(inst: ProblemInstance, cfg: AlgorithmConfig, rng: np.random.Generator) -> Solution:
    if cfg.init is Init.ALL_ONES:
        return Solution.full(inst)
    if cfg.init is Init.ALL_ZEROS:
        return Solution.zeros(inst)
    if cfg.init is Init.GIVEN:
        return Solution.from_bits(inst, cfg.initial_bits)
    return Solution.from_bits(inst, rng.integers(0, 2, inst.n).tolist())


Observer = Callable[[int, Solution, FitnessValue], None]


def run(
    inst: ProblemInstance,
    cfg: AlgorithmConfig,
    target: Optional[FitnessValue] = None,
    *,
    stop_when_feasible: bool = False,
    observer: Optional[Observer] = None,
) -> RunRecord:
    """Run one trial until ``target`` is reached or the budget is spent.

    The initial solution is evaluation 0 and every offspring costs one
    evaluation, so ``evaluations`` is also the index of the last one.
    ``observer`` is called with every accepted offspring (including
    offspring that are identical to their parent).
    """
    cfg.validate_for(inst)
    rng = make_rng(cfg.seed)
    x0 = initial_solution(inst, cfg, rng)
    n = inst.n
    alpha = inst.tolerance
    group_of = inst.group_of
    units = inst.profit_units
    rtol = BETA_TIE_RTOL

    cache: dict[tuple[int, int], float] = {}

    def beta_of(ones: int, pairs: int) -> float:
        key = (ones, pairs)
        b = cache.get(key)
        if b is None:
            b = cache[key] = beta_from_counts(inst, ones, pairs)
        return b

    bits = list(x0.bits)
    counts = list(x0.group_counts)
    ones = x0.ones
    pairs = sum(r * (r - 1) for r in counts)
    total = sum(u for u, b in zip(units, bits) if b)
    beta = beta_of(ones, pairs)
    feasible = beta <= alpha
    key = total if feasible else -1

    def current_fitness() -> FitnessValue:
        return FitnessValue(inst.profit_from_units(total) if feasible else -1.0, beta)

    def current_solution() -> Solution:
        return Solution(tuple(bits), tuple(counts), ones)

    t = 0
    t_feasible = 0 if feasible else None
    t_optimal = None
    if target is not None and current_fitness().at_least(target):
        t_optimal = 0
    trajectory = [(0, current_fitness())] if cfg.record_trajectory else None

    def done() -> bool:
        return t_optimal is not None or (stop_when_feasible and t_feasible is not None)

    stream = (_RlsStream if cfg.kind is Algorithm.RLS else _EaStream)(n, rng)
    next_flips = stream.next
    budget = cfg.max_evaluations

    while t < budget and not done():
        t += 1
        flips = next_flips()
        if not flips:
            if observer is not None:
                observer(t, current_solution(), current_fitness())
            continue
        d_ones = 0
        d_pairs = 0
        d_total = 0
        if len(flips) == 1:
            k = flips[0]
            r = counts[group_of[k]]
            if bits[k]:
                d_ones, d_pairs, d_total = -1, -2 * (r - 1), -units[k]
            else:
                d_ones, d_pairs, d_total = 1, 2 * r, units[k]
        else:
            touched: dict[int, int] = {}
            for k in flips:
                g = group_of[k]
                shift = touched.get(g, 0)
                r = counts[g] + shift
                if bits[k]:
                    d_ones -= 1
                    d_pairs -= 2 * (r - 1)
                    d_total -= units[k]
                    touched[g] = shift - 1
                else:
                    d_ones += 1
                    d_pairs += 2 * r
                    d_total += units[k]
                    touched[g] = shift + 1
        y_ones = ones + d_ones
        y_pairs = pairs + d_pairs
        y_beta = beta_of(y_ones, y_pairs)
        y_feasible = y_beta <= alpha
        y_key = total + d_total if y_feasible else -1
        if y_key < key:
            continue
        if y_key == key:
            tied = abs(y_beta - beta) <= rtol * max(1.0, abs(beta), abs(y_beta))
            if not tied and y_beta > beta:
                continue
            improved = not tied
        else:
            improved = True
        for k in flips:
            delta = 1 - 2 * bits[k]
            bits[k] += delta
            counts[group_of[k]] += delta
        ones, pairs, total = y_ones, y_pairs, total + d_total
        beta, feasible, key = y_beta, y_feasible, y_key
        if cfg.verify:
            _verify_state(inst, bits, current_fitness())
        if feasible and t_feasible is None:
            t_feasible = t
        if improved:
            fx = current_fitness()
            if trajectory is not None:
                trajectory.append((t, fx))
            if target is not None and t_optimal is None and fx.at_least(target):
                t_optimal = t
        if observer is not None:
            observer(t, current_solution(), current_fitness())

    return RunRecord(
        seed=cfg.seed,
        t_feasible=t_feasible,
        t_optimal=t_optimal,
        evaluations=t,
        final_solution=current_solution(),
        final_fitness=current_fitness(),
        trajectory=trajectory,
    )


def _verify_state(inst: ProblemInstance, bits: list[int], incremental: FitnessValue) -> None:
    full = fitness(inst, Solution.from_bits(inst, bits))
    if full != incremental:
        raise AssertionError(f"incremental fitness {incremental} != recomputed {full}")
