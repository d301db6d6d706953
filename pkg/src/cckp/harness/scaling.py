"""Fit hitting-time medians against candidate growth models."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from cckp.harness.experiment import MODELS, ExperimentRow, proven_model

MIN_SIZES = 3
MIN_TRIALS = 30
RESIDUAL_THRESHOLD = 0.25


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class SizeStats:
    n: int
    completed: int
    censored: int
    median: float
    q90: float


@dataclass(frozen=True)
class ModelFit:
    model: str
    constant: float
    # Per-size constants median / g(n) and their relative residuals.
    per_size_constants: tuple[float, ...]
    residuals: tuple[float, ...]

    @property
    def max_residual(self) -> float:
        return max(abs(r) for r in self.residuals)

    def growth(self) -> float:
        """Largest per-size constant relative to the constant at the smallest size."""
        return max(self.per_size_constants) / self.per_size_constants[0]


@dataclass(frozen=True)
class SettingReport:
    algorithm: str
    target: str
    sizes: tuple[SizeStats, ...]
    fits: Mapping[str, ModelFit]
    proven_model: str
    threshold: float

    @property
    def consistent(self) -> bool:
        """The proven model explains the medians up to one stable constant."""
        return self.fits[self.proven_model].max_residual <= self.threshold

    @property
    def bounded(self) -> bool:
        """No size grows faster than the proven model beyond the threshold."""
        return self.fits[self.proven_model].growth() <= 1 + self.threshold

    def lines(self) -> list[str]:
        out = [f"{self.algorithm} / {self.target}  (proven model: {self.proven_model})"]
        out.append("  n        done  cens    median       q90")
        for s in self.sizes:
            out.append(f"  {s.n:<8d} {s.completed:<5d} {s.censored:<5d} "
                       f"{s.median:<12.6g} {s.q90:<12.6g}")
        for name, fit in self.fits.items():
            mark = "*" if name == self.proven_model else " "
            res = " ".join(f"{r:+.3f}" for r in fit.residuals)
            out.append(f" {mark}{name:<10s} C={fit.constant:<11.5g} max|res|={fit.max_residual:.3f}"
                       f"  growth={fit.growth():.3f}  res=[{res}]")
        out.append(f"  consistent={self.consistent} bounded={self.bounded}")
        return out


def fit_model(ns: Sequence[int], medians: Sequence[float], g: Callable[[int], float],
              name: str = "") -> ModelFit:
    """Least-squares fit of ``log median = log C + log g(n)``.

    Residuals are relative: ``median / (C g(n)) - 1``.
    """
    consts = np.array([y / g(n) for n, y in zip(ns, medians)], dtype=float)
    if np.any(consts <= 0):
        raise InsufficientDataError("medians must be positive to fit a growth model")
    c = float(np.exp(np.mean(np.log(consts))))
    return ModelFit(name, c, tuple(consts.tolist()), tuple((consts / c - 1).tolist()))


def size_stats(times: Sequence[int], censored: int, n: int) -> SizeStats:
    arr = np.asarray(times, dtype=float)
    return SizeStats(n, len(arr), censored, float(np.median(arr)), float(np.quantile(arr, 0.9)))


def scaling_summary(
    rows: Sequence[ExperimentRow],
    models: Optional[Mapping[str, Callable[[int], float]]] = None,
    *,
    threshold: float = RESIDUAL_THRESHOLD,
    min_sizes: int = MIN_SIZES,
    min_trials: int = MIN_TRIALS,
    model_for: Callable[[str, str], str] = proven_model,
) -> list[SettingReport]:
    """Per (algorithm, target) hitting-time statistics and model fits.

    Statistics use completed trials only; censored trials are counted.
    """
    models = dict(MODELS if models is None else models)
    groups: dict[tuple[str, str], dict[int, list]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        groups[(row.algorithm, row.target)][row.n].append(row.hitting_time)
    reports = []
    for (algorithm, target), by_n in groups.items():
        if len(by_n) < min_sizes:
            raise InsufficientDataError(
                f"{algorithm}/{target}: {len(by_n)} sizes, need at least {min_sizes}")
        stats = []
        for n in sorted(by_n):
            done = [t for t in by_n[n] if t is not None]
            if len(done) < min_trials:
                raise InsufficientDataError(
                    f"{algorithm}/{target} n={n}: {len(done)} completed trials, "
                    f"need at least {min_trials}")
            stats.append(size_stats(done, len(by_n[n]) - len(done), n))
        ns = [s.n for s in stats]
        meds = [s.median for s in stats]
        fits = {name: fit_model(ns, meds, g, name) for name, g in models.items()}
        pm = model_for(algorithm, target)
        if pm not in fits:
            fits[pm] = fit_model(ns, meds, MODELS[pm], pm)
        reports.append(SettingReport(algorithm, target, tuple(stats), fits, pm, threshold))
    return reports


def format_report(reports: Sequence[SettingReport]) -> str:
    return "\n".join(line for r in reports for line in r.lines() + [""])

