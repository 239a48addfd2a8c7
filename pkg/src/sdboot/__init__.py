"""Subsampled double bootstrap and its competitors under a time budget.

The i.i.d. schemes are the bootstrap, the bag of little bootstraps (BLB)
and the subsampled double bootstrap (SDB); the time-series schemes are the
moving block bootstrap (MBB) and the block-resampling versions of BLB and
SDB. All of them work on weighted samples: ``b`` distinct rows with integer
frequencies summing to the nominal size ``n``.
"""

__version__ = "0.1.0"

from .dataset import Dataset, WeightedSample
from .measures import MeasureSpec, ecdf_build, evaluate_trace, plug_in, quantile
from .schemes import (
    CostModel,
    RootTrace,
    Scheme,
    SchemeConfig,
    VirtualClock,
    WallClock,
    run_budgeted,
)

__all__ = [
    "CostModel",
    "Dataset",
    "MeasureSpec",
    "RootTrace",
    "Scheme",
    "SchemeConfig",
    "VirtualClock",
    "WallClock",
    "WeightedSample",
    "ecdf_build",
    "evaluate_trace",
    "plug_in",
    "quantile",
    "run_budgeted",
]
