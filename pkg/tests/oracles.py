"""Independent reference computations for the tests.

Nothing here goes through group counts: moments come from the full item
covariance matrix and the optimum from plain enumeration in rationals.
"""

import itertools
from fractions import Fraction

import numpy as np

from cckp.model import ProblemInstance


def bit_rows(n):
    """All ``2**n`` bit vectors as rows, row ``k`` holding the bits of ``k``."""
    masks = np.arange(1 << n, dtype=np.int64)
    return (masks[:, None] >> np.arange(n)) & 1


def same_group(inst):
    g = np.array(inst.group_of)
    return (g[:, None] == g[None, :]).astype(np.int64)


def covariance_matrix(inst):
    cov = same_group(inst) * float(inst.covariance)
    np.fill_diagonal(cov, inst.variance)
    return cov


def quadratic_form(inst, X):
    """``x^T Sigma x`` for each row ``x`` of ``X``."""
    X = np.asarray(X, dtype=float)
    return ((X @ covariance_matrix(inst)) * X).sum(axis=1)


def quadratic_form_counts(inst, X):
    """Number of diagonal and off-diagonal covariance entries each row selects."""
    Xf = np.asarray(X, dtype=float)
    diag = X.sum(axis=1)
    # Entries are small integers, so the float product is exact.
    off = np.rint(((Xf @ same_group(inst)) * Xf).sum(axis=1)).astype(np.int64) - diag
    return diag, off


def exact_moments(inst, bits):
    sel = [k for k, b in enumerate(bits) if b]
    a, d, c = (Fraction(v) for v in (inst.expected_weight, inst.variance, inst.covariance))
    mean = a * len(sel)
    var = sum(
        (d if k == l else c) for k in sel for l in sel if inst.group_of[k] == inst.group_of[l]
    )
    return mean, Fraction(var)


def exact_fitness(inst, bits):
    """Penalized (profit, beta) straight from the definitions, in rationals."""
    mean, var = exact_moments(inst, bits)
    budget, alpha = Fraction(inst.budget), Fraction(inst.tolerance)
    if mean < budget:
        beta = var / (var + (budget - mean) ** 2)
    else:
        beta = 1 + mean - budget
    if beta > alpha:
        return Fraction(-1), beta
    return sum((Fraction(p) for p, b in zip(inst.flat_profits, bits) if b), Fraction(0)), beta


def enumerate_optimum(inst):
    """Lexicographic optimum, its maximizers (as bit tuples) and the top feasible level."""
    best, argbest, top = None, [], 0
    for bits in itertools.product((0, 1), repeat=inst.n):
        p, beta = exact_fitness(inst, bits)
        if p >= 0:
            top = max(top, sum(bits))
        key = (p, -beta)
        if best is None or key > best:
            best, argbest = key, [bits]
        elif key == best:
            argbest.append(bits)
    return (best[0], -best[1]), argbest, top


def random_instance(rng, max_groups=4, max_size=4, profit_kind="uniform", min_n=1, max_n=None):
    while True:
        K = int(rng.integers(1, max_groups + 1))
        m = int(rng.integers(1, max_size + 1))
        n = K * m
        if n >= min_n and (max_n is None or n <= max_n):
            break
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
    elif profit_kind == "mirrored0":
        row = sorted((float(v) for v in rng.integers(0, 6, m)), reverse=True)
        profits = [row] * K
    else:
        profits = rng.uniform(0, 10, (K, m)).tolist()
    return ProblemInstance(K, m, a, d, c, B, alpha, profits)
