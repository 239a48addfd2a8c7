"""Empirical root distributions, precision functionals and error tracking."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .exceptions import EmptyEnsembleError, InvalidConfigurationError

if TYPE_CHECKING:
    from .schemes import RootTrace

__all__ = [
    "EmpiricalDistribution",
    "MeasureSpec",
    "ErrorEvolution",
    "ecdf_build",
    "quantile",
    "plug_in",
    "blb_aggregate",
    "error_rate",
    "evaluate_trace",
    "estimate_at",
]


@dataclass(frozen=True)
class EmpiricalDistribution:
    sorted_roots: np.ndarray

    @property
    def count(self) -> int:
        return self.sorted_roots.shape[0]

    def cdf(self, x: float) -> float:
        """Fraction of roots ``<= x``."""
        return np.searchsorted(self.sorted_roots, x, side="right") / self.count


def ecdf_build(roots) -> EmpiricalDistribution:
    arr = np.array(roots, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyEnsembleError("cannot build an ecdf from zero roots")
    if not np.all(np.isfinite(arr)):
        raise InvalidConfigurationError("roots must be finite")
    arr.sort()
    return EmpiricalDistribution(arr)


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidConfigurationError(f"quantile level must lie in (0, 1), got {alpha}")


def quantile(dist: EmpiricalDistribution, alpha: float) -> float:
    """Left-continuous inverse of the ecdf: ``sorted[ceil(alpha*count) - 1]``."""
    _check_level(alpha)
    k = math.ceil(alpha * dist.count) - 1
    return float(dist.sorted_roots[max(k, 0)])


@dataclass(frozen=True)
class MeasureSpec:
    """Precision functional applied to a root distribution.

    ``kind`` is ``"quantile"`` (``levels=(alpha,)``), ``"width"``
    (``levels=(lo, hi)``) or ``"scaled_mse"`` (no levels).
    """

    kind: str
    levels: tuple[float, ...] = ()

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if kind == "quantile":
            if len(levels) != 1:
                raise InvalidConfigurationError("quantile measure takes one level")
            _check_level(levels[0])
        elif kind == "width":
            if len(levels) != 2:
                raise InvalidConfigurationError("width measure takes two levels")
            for lv in levels:
                _check_level(lv)
            if not levels[0] < levels[1]:
                raise InvalidConfigurationError("width levels must satisfy lo < hi")
        elif kind == "scaled_mse":
            if levels:
                raise InvalidConfigurationError("scaled_mse takes no levels")
        else:
            raise InvalidConfigurationError(f"unknown measure kind {self.kind!r}")

    @classmethod
    def quantile(cls, alpha: float) -> "MeasureSpec":
        return cls("quantile", (alpha,))

    @classmethod
    def width(cls, lo: float, hi: float) -> "MeasureSpec":
        return cls("width", (lo, hi))

    @classmethod
    def parse(cls, text: str) -> "MeasureSpec":
        """Parse ``quantile:0.95``, ``width:0.05:0.95`` or ``scaled_mse``."""
        kind, *rest = text.strip().split(":")
        try:
            levels = tuple(float(v) for v in rest)
        except ValueError:
            raise InvalidConfigurationError(f"bad measure {text!r}") from None
        return cls(kind, levels)

    def __str__(self) -> str:
        return ":".join([self.kind, *(repr(v) for v in self.levels)])


def plug_in(dist: EmpiricalDistribution, measure: MeasureSpec) -> float:
    if measure.kind == "quantile":
        return quantile(dist, measure.levels[0])
    if measure.kind == "width":
        lo, hi = measure.levels
        return quantile(dist, hi) - quantile(dist, lo)
    return float(np.mean(dist.sorted_roots**2))


def blb_aggregate(per_subset_measures) -> float:
    vals = np.asarray(per_subset_measures, dtype=float).ravel()
    if vals.size == 0:
        raise EmptyEnsembleError("no completed subsets to average")
    # correctly rounded, so the result does not depend on completion order
    return math.fsum(vals.tolist()) / vals.size


def error_rate(estimate: float, truth: float) -> float:
    """Relative error ``|estimate / truth - 1|``."""
    if truth == 0:
        raise InvalidConfigurationError("error rate is undefined for a zero truth value")
    return abs(estimate / truth - 1.0)


@dataclass
class ErrorEvolution:
    """Error (and estimate) read off a trace at each grid time.

    ``estimates[i]`` is ``None`` before the first completed iteration;
    ``errors[i]`` is ``None`` when no truth was supplied.
    """

    times: list[float] = field(default_factory=list)
    estimates: list[float | None] = field(default_factory=list)
    errors: list[float | None] = field(default_factory=list)

    @property
    def grid(self) -> list[tuple[float, float | None]]:
        return list(zip(self.times, self.errors))


def _grid(grid_step: float, horizon: float) -> list[float]:
    if grid_step <= 0:
        raise InvalidConfigurationError("grid_step must be positive")
    count = int(math.floor(horizon / grid_step + 1e-9))
    return [grid_step * (i + 1) for i in range(count)]


def estimate_at(records, measure: MeasureSpec, averaged: bool) -> float | None:
    """Cumulative estimate from a set of completed iteration records.

    ``averaged`` selects subset-averaging (BLB variants); otherwise all roots
    are pooled into one ecdf.
    """
    ok = [r for r in records if not r.failed]
    if not ok:
        return None
    if averaged:
        return blb_aggregate([r.per_subset_measure for r in ok])
    return plug_in(ecdf_build(np.concatenate([r.roots for r in ok])), measure)


def evaluate_trace(
    trace: "RootTrace",
    measure: MeasureSpec,
    truth: float | None,
    grid_step: float = 1.0,
    horizon: float | None = None,
) -> ErrorEvolution:
    """Error evolution on the grid ``grid_step, 2*grid_step, ..., horizon``.

    At time ``t`` only records with ``completed_at <= t`` count. Before the
    first successful completion the error is 1.
    """
    if horizon is None:
        horizon = trace.config.budget_seconds
    averaged = trace.config.scheme.averages_subsets
    records = sorted(trace.records, key=lambda r: (r.completed_at, r.iteration_index))
    times = np.array([r.completed_at for r in records])
    out = ErrorEvolution()
    last_k, last_est = -1, None
    for t in _grid(grid_step, horizon):
        k = int(np.searchsorted(times, t, side="right"))
        if k != last_k:
            last_est = estimate_at(records[:k], measure, averaged)
            last_k = k
        out.times.append(t)
        out.estimates.append(last_est)
        if truth is None:
            out.errors.append(None)
        elif last_est is None:
            out.errors.append(1.0)
        else:
            out.errors.append(error_rate(last_est, truth))
    return out
