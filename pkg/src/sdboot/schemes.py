"""Resampling schemes as iteration generators plus the time-budgeted executor.

One *iteration* is the unit a scheme completes atomically: a single
resample for bootstrap/MBB, one subset with its single resample for SDB,
and one subset with all ``R`` resamples for BLB. All randomness of
iteration ``j`` comes from generators keyed ``(seed, j, slot)``: slot 0 picks
the subset, slot ``k >= 1`` drives the ``k``-th resample.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .dataset import Dataset, WeightedSample
from .estimators import ESTIMATORS, ROOTS
from .exceptions import EstimationError, InvalidConfigurationError
from .measures import MeasureSpec, ecdf_build, plug_in
from .sampling import (
    derive_rng,
    draw_iid_subset,
    draw_mbb_weights,
    draw_multinomial_weights,
    draw_ts_subset,
)

log = logging.getLogger(__name__)

__all__ = [
    "Scheme",
    "SchemeConfig",
    "IterationRecord",
    "RootTrace",
    "WallClock",
    "VirtualClock",
    "CostModel",
    "sdb_iteration",
    "blb_iteration",
    "bootstrap_iteration",
    "sdb_ts_iteration",
    "blb_ts_iteration",
    "mbb_iteration",
    "run_iteration",
    "run_budgeted",
    "calibrate_cost_model",
    "subset_size_from_gamma",
]

StreamFn = Callable[[int, int], np.random.Generator]


class Scheme(str, Enum):
    BOOT = "boot"
    BLB = "blb"
    SDB = "sdb"
    MBB = "mbb"
    BLB_TS = "blb_ts"
    SDB_TS = "sdb_ts"

    @property
    def time_series(self) -> bool:
        return self in (Scheme.MBB, Scheme.BLB_TS, Scheme.SDB_TS)

    @property
    def full_data(self) -> bool:
        """Resamples drawn from all ``n`` rows against the full-data estimate."""
        return self in (Scheme.BOOT, Scheme.MBB)

    @property
    def averages_subsets(self) -> bool:
        return self in (Scheme.BLB, Scheme.BLB_TS)


def subset_size_from_gamma(n: int, gamma: float) -> int:
    """The ``b = n**gamma`` convention, rounded to the nearest integer."""
    return max(1, int(round(n**gamma)))


@dataclass(frozen=True)
class SchemeConfig:
    """Everything that determines a run besides the data.

    ``b`` is ignored by bootstrap and MBB (they use ``b = n``). ``S`` caps
    the number of iterations; ``None`` runs until the budget is spent.
    """

    scheme: Scheme
    b: int | None = None
    S: int | None = None
    R: int = 100
    L: int | None = None
    budget_seconds: float = 60.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.budget_seconds > 0:
            raise InvalidConfigurationError("budget_seconds must be positive")
        if self.S is not None and self.S < 0:
            raise InvalidConfigurationError("S must be non-negative")
        if self.scheme.averages_subsets and self.R < 1:
            raise InvalidConfigurationError("BLB needs R >= 1")
        if self.scheme.time_series and (self.L is None or self.L < 1):
            raise InvalidConfigurationError("time-series schemes need a block length L >= 1")
        if not self.scheme.full_data and (self.b is None or self.b < 1):
            raise InvalidConfigurationError(f"{self.scheme.value} needs a subset size b >= 1")

    def subset_size(self, n: int) -> int:
        return n if self.scheme.full_data else int(self.b)

    def validate(self, n: int) -> None:
        b = self.subset_size(n)
        if b > n:
            raise InvalidConfigurationError(f"subset size b={b} exceeds n={n}")
        if self.scheme.time_series and self.L > b:
            raise InvalidConfigurationError(f"block length L={self.L} exceeds b={b}")


@dataclass
class IterationRecord:
    iteration_index: int
    roots: np.ndarray
    per_subset_measure: float | None = None
    completed_at: float = 0.0
    reference: str = "subset"
    distinct_points: int = 0
    n_estimates: int = 0
    n_failed: int = 0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.roots.size == 0


@dataclass
class RootTrace:
    config: SchemeConfig
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return sum(r.failed for r in self.records)

    def roots(self) -> np.ndarray:
        ok = [r.roots for r in self.records if not r.failed]
        return np.concatenate(ok) if ok else np.empty(0)


class WallClock:
    """Seconds elapsed since construction."""

    def __init__(self):
        self._t0 = time.perf_counter()

    def now(self) -> float:
        return time.perf_counter() - self._t0

    def advance(self, seconds: float) -> None:
        pass


class VirtualClock:
    """Clock that only moves when told to."""

    def __init__(self, start: float = 0.0):
        self.t = float(start)

    def now(self) -> float:
        return self.t

    def advance(self, seconds: float) -> None:
        self.t += seconds


@dataclass(frozen=True)
class CostModel:
    """Virtual seconds charged for a completed iteration.

    ``per_iteration`` is a flat charge; ``per_estimate + per_point * m`` is
    charged for every estimation on ``m`` distinct rows, so BLB pays for
    ``R + 1`` estimations on ``b`` rows per subset and SDB for two.
    """

    per_iteration: float = 0.0
    per_estimate: float = 0.0
    per_point: float = 0.0

    def estimation_cost(self, distinct_points: int) -> float:
        return self.per_estimate + self.per_point * distinct_points

    def iteration_cost(self, record: IterationRecord) -> float:
        return self.per_iteration + record.n_estimates * self.estimation_cost(
            record.distinct_points
        )


def _resolve(estimator, root):
    if isinstance(estimator, str):
        estimator = ESTIMATORS[estimator]
    if isinstance(root, str):
        root = ROOTS[root]
    return estimator, root


def _default_streams(config: SchemeConfig) -> StreamFn:
    seed = config.seed
    return lambda j, k: derive_rng(seed, j, k)


def _failed(iteration_index, exc, **kw) -> IterationRecord:
    log.debug("iteration %d failed: %s", iteration_index, exc)
    return IterationRecord(iteration_index, np.empty(0), error=str(exc) or type(exc).__name__, **kw)


def _draw_weights(config: SchemeConfig, n: int, b: int, rng) -> np.ndarray:
    if config.scheme.time_series:
        return draw_mbb_weights(n, b, config.L, rng).weights
    return draw_multinomial_weights(n, b, rng).weights


def _draw_subset(data: Dataset, config: SchemeConfig, rng) -> Dataset:
    n = len(data)
    if config.scheme.time_series:
        sub = draw_ts_subset(n, config.b, rng)
        return data.window(sub.start, sub.start + sub.b)
    return data.take(draw_iid_subset(n, config.b, rng).indices)


def _subset_iteration(data, estimator, root, measure, config, iteration_index, streams, R):
    estimator, root = _resolve(estimator, root)
    streams = streams or _default_streams(config)
    n, b = len(data), config.b
    sub = _draw_subset(data, config, streams(iteration_index, 0))
    common = dict(reference="subset", distinct_points=b)
    try:
        ref = estimator(WeightedSample.unweighted(sub))
    except EstimationError as exc:
        return _failed(iteration_index, exc, n_estimates=1, n_failed=R, **common)
    roots, n_failed, last_exc = [], 0, None
    for k in range(1, R + 1):
        w = _draw_weights(config, n, b, streams(iteration_index, k))
        ws = WeightedSample(sub, w, n)
        try:
            roots.append(root(ws, estimator(ws), ref))
        except EstimationError as exc:
            n_failed += 1
            last_exc = exc
    if not roots:
        return _failed(iteration_index, last_exc, n_estimates=R + 1, n_failed=n_failed, **common)
    roots = np.array(roots, dtype=float)
    psm = plug_in(ecdf_build(roots), measure) if measure is not None else None
    return IterationRecord(
        iteration_index, roots, psm, n_estimates=R + 1, n_failed=n_failed, **common
    )


def _full_iteration(data, estimator, root, config, iteration_index, reference, streams):
    estimator, root = _resolve(estimator, root)
    streams = streams or _default_streams(config)
    n = len(data)
    if reference is None:
        reference = estimator(WeightedSample.unweighted(data))
    w = _draw_weights(config, n, n, streams(iteration_index, 1))
    ws = WeightedSample(data, w, n)
    common = dict(reference="full", distinct_points=n, n_estimates=1)
    try:
        value = root(ws, estimator(ws), reference)
    except EstimationError as exc:
        return _failed(iteration_index, exc, n_failed=1, **common)
    return IterationRecord(iteration_index, np.array([value]), **common)


def _expect(config: SchemeConfig, *schemes: Scheme) -> None:
    if config.scheme not in schemes:
        raise InvalidConfigurationError(
            f"config is for {config.scheme.value}, expected {'/'.join(s.value for s in schemes)}"
        )


def sdb_iteration(data, estimator, root, config, iteration_index, *, streams=None):
    """One random subset, one multinomial resample of nominal size n, one root."""
    _expect(config, Scheme.SDB)
    return _subset_iteration(data, estimator, root, None, config, iteration_index, streams, 1)


def blb_iteration(data, estimator, root, measure, config, iteration_index, *, streams=None):
    """One random subset with ``R`` resamples and the subset's plug-in measure."""
    _expect(config, Scheme.BLB)
    return _subset_iteration(
        data, estimator, root, measure, config, iteration_index, streams, config.R
    )


def bootstrap_iteration(data, estimator, root, config, iteration_index, *, reference=None, streams=None):
    """One multinomial resample of all rows, rooted at the full-data estimate.

    Pass ``reference`` to reuse a cached full-data estimate.
    """
    _expect(config, Scheme.BOOT)
    return _full_iteration(data, estimator, root, config, iteration_index, reference, streams)


def sdb_ts_iteration(data, estimator, root, config, iteration_index, *, streams=None):
    _expect(config, Scheme.SDB_TS)
    return _subset_iteration(data, estimator, root, None, config, iteration_index, streams, 1)


def blb_ts_iteration(data, estimator, root, measure, config, iteration_index, *, streams=None):
    _expect(config, Scheme.BLB_TS)
    return _subset_iteration(
        data, estimator, root, measure, config, iteration_index, streams, config.R
    )


def mbb_iteration(data, estimator, root, config, iteration_index, *, reference=None, streams=None):
    _expect(config, Scheme.MBB)
    return _full_iteration(data, estimator, root, config, iteration_index, reference, streams)


def run_iteration(data, estimator, root, measure, config, iteration_index, *, reference=None, streams=None):
    """Dispatch to the iteration function of ``config.scheme``."""
    s = config.scheme
    if s.full_data:
        return _full_iteration(data, estimator, root, config, iteration_index, reference, streams)
    R = config.R if s.averages_subsets else 1
    psm_measure = measure if s.averages_subsets else None
    return _subset_iteration(
        data, estimator, root, psm_measure, config, iteration_index, streams, R
    )


def run_budgeted(
    data: Dataset,
    estimator,
    root,
    measure: MeasureSpec | None,
    config: SchemeConfig,
    *,
    clock=None,
    cost_model: CostModel | None = None,
    workers: int = 1,
    streams: StreamFn | None = None,
) -> RootTrace:
    """Run iterations until ``config.budget_seconds`` (or ``config.S``) is used up.

    An iteration in flight when the budget expires still completes and is
    recorded with its true completion time. With a ``cost_model`` the clock
    is advanced by the modelled cost of each iteration instead of being read
    from the wall; with several workers each worker then owns a virtual
    timeline and iterations go to the earliest free one, so virtual runs
    stay deterministic at any worker count.
    """
    estimator, root = _resolve(estimator, root)
    config.validate(len(data))
    if workers < 1:
        raise InvalidConfigurationError("workers must be >= 1")
    if clock is None:
        clock = VirtualClock() if cost_model is not None else WallClock()
    trace = RootTrace(config)

    reference = None
    if config.scheme.full_data:
        reference = estimator(WeightedSample.unweighted(data))
        if cost_model is not None:
            clock.advance(cost_model.estimation_cost(len(data)))

    def work(j):
        return run_iteration(
            data, estimator, root, measure, config, j, reference=reference, streams=streams
        )

    cap = math.inf if config.S is None else config.S
    budget = config.budget_seconds

    if workers == 1:
        j = 1
        while j <= cap and clock.now() < budget:
            rec = work(j)
            if cost_model is not None:
                clock.advance(cost_model.iteration_cost(rec))
            rec.completed_at = clock.now()
            trace.records.append(rec)
            j += 1
        return trace

    if cost_model is not None:
        _run_virtual_parallel(work, trace, clock, cost_model, workers, cap, budget)
    else:
        _run_wall_parallel(work, trace, clock, workers, cap, budget)
    return trace


def _run_virtual_parallel(work, trace, clock, cost_model, workers, cap, budget):
    lanes = [clock.now()] * workers
    j = 1
    with ThreadPoolExecutor(workers) as pool:
        while j <= cap and min(lanes) < budget:
            batch = list(range(j, int(min(j + workers, cap + 1))))
            for rec in pool.map(work, batch):
                lane = lanes.index(min(lanes))
                if lanes[lane] >= budget:
                    return
                lanes[lane] += cost_model.iteration_cost(rec)
                rec.completed_at = lanes[lane]
                trace.records.append(rec)
                j += 1


def _run_wall_parallel(work, trace, clock, workers, cap, budget):
    j = 1
    pending = set()
    with ThreadPoolExecutor(workers) as pool:
        while True:
            while len(pending) < workers and j <= cap and clock.now() < budget:
                pending.add(pool.submit(work, j))
                j += 1
            if not pending:
                break
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                rec = fut.result()
                rec.completed_at = clock.now()
                trace.records.append(rec)
    trace.records.sort(key=lambda r: r.iteration_index)


def calibrate_cost_model(data, estimator, root, measure, config, iterations: int = 20) -> CostModel:
    """Flat per-iteration cost measured by timing real iterations on ``data``.

    Indices beyond any realistic run are used so calibration draws never
    coincide with the run's own streams.
    """
    estimator, root = _resolve(estimator, root)
    config.validate(len(data))
    reference = None
    if config.scheme.full_data:
        reference = estimator(WeightedSample.unweighted(data))
    start = 2**40
    run_iteration(data, estimator, root, measure, config, start, reference=reference)
    t0 = time.perf_counter()
    for j in range(start + 1, start + 1 + iterations):
        run_iteration(data, estimator, root, measure, config, j, reference=reference)
    return CostModel(per_iteration=(time.perf_counter() - t0) / iterations)
