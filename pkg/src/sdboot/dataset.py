"""Row containers used by estimators and resampling schemes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Observations in row order.

    ``y`` is the response (or the series itself for univariate data);
    ``X`` is an optional ``(rows, d)`` regressor matrix.
    """

    y: np.ndarray
    X: np.ndarray | None = None

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        object.__setattr__(self, "y", y)
        if self.X is not None:
            X = np.asarray(self.X, dtype=float)
            if X.ndim == 1:
                X = X[:, None]
            if X.shape[0] != y.shape[0]:
                raise ValueError("X and y must have the same number of rows")
            object.__setattr__(self, "X", np.ascontiguousarray(X))

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return 0 if self.X is None else self.X.shape[1]

    def take(self, indices) -> "Dataset":
        if self.X is None:
            return Dataset(self.y[indices])
        return Dataset(self.y[indices], self.X[indices])

    def window(self, start: int, stop: int) -> "Dataset":
        # contiguous slices are views, no copy
        if self.X is None:
            return Dataset(self.y[start:stop])
        return Dataset(self.y[start:stop], self.X[start:stop])

    def repeat(self, weights) -> "Dataset":
        """Row-replicate each observation ``weights[i]`` times."""
        w = np.asarray(weights, dtype=np.int64)
        if self.X is None:
            return Dataset(np.repeat(self.y, w))
        return Dataset(np.repeat(self.y, w), np.repeat(self.X, w, axis=0))


@dataclass(frozen=True)
class WeightedSample:
    """``b`` distinct rows plus integer frequencies summing to ``nominal_n``."""

    data: Dataset
    weights: np.ndarray
    nominal_n: int

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.shape != (len(self.data),):
            raise ValueError("weights must have one entry per row")
        object.__setattr__(self, "weights", w)

    @classmethod
    def unweighted(cls, data: Dataset) -> "WeightedSample":
        return cls(data, np.ones(len(data), dtype=np.int64), len(data))

    @property
    def y(self) -> np.ndarray:
        return self.data.y

    @property
    def X(self) -> np.ndarray | None:
        return self.data.X

    def expand(self) -> Dataset:
        return self.data.repeat(self.weights)
