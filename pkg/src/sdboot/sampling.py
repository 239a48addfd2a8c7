"""Random subsets and resample weight vectors.

Every draw takes an explicit ``numpy.random.Generator``. Reproducible
parallel runs obtain one independent generator per (seed, iteration, slot)
through :func:`derive_rng`, so results never depend on execution order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidConfigurationError

__all__ = [
    "IndexSubset",
    "WeightVector",
    "derive_rng",
    "draw_iid_subset",
    "draw_ts_subset",
    "draw_multinomial_weights",
    "draw_mbb_offsets",
    "mbb_weights_from_offsets",
    "draw_mbb_weights",
]


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the substream ``key`` of master ``seed``.

    The seed and key are hashed by ``SeedSequence``; distinct keys give
    statistically independent streams regardless of call order.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class IndexSubset:
    indices: np.ndarray
    contiguous: bool
    parent_n: int

    @property
    def b(self) -> int:
        return self.indices.shape[0]

    @property
    def start(self) -> int:
        return int(self.indices[0])


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    nominal_n: int

    @property
    def b(self) -> int:
        return self.weights.shape[0]


def _check_subset_args(n: int, b: int) -> None:
    if b < 1 or n < 1:
        raise InvalidConfigurationError(f"subset size b={b} and n={n} must be >= 1")
    if b > n:
        raise InvalidConfigurationError(f"subset size b={b} exceeds sample size n={n}")


def draw_iid_subset(n: int, b: int, rng: np.random.Generator) -> IndexSubset:
    """Simple random sample of ``b`` distinct row indices out of ``n``.

    Indices come back sorted, so ``b == n`` always yields ``0..n-1``.
    """
    _check_subset_args(n, b)
    idx = rng.choice(n, size=b, replace=False)
    idx.sort()
    return IndexSubset(idx.astype(np.int64, copy=False), False, n)


def draw_ts_subset(n: int, b: int, rng: np.random.Generator) -> IndexSubset:
    """Contiguous window ``J..J+b-1`` with ``J`` uniform on ``{0, ..., n-b}``."""
    _check_subset_args(n, b)
    start = int(rng.integers(0, n - b + 1))
    return IndexSubset(np.arange(start, start + b, dtype=np.int64), True, n)


def draw_multinomial_weights(n: int, b: int, rng: np.random.Generator) -> WeightVector:
    """Multinomial(n; 1/b, ..., 1/b) frequencies over ``b`` cells."""
    if n < 1 or b < 1:
        raise InvalidConfigurationError(f"multinomial needs n >= 1 and b >= 1, got n={n}, b={b}")
    # numpy draws multinomials by sequential conditional binomials: O(b), exact
    w = rng.multinomial(n, np.full(b, 1.0 / b))
    return WeightVector(w.astype(np.int64, copy=False), n)


def _check_mbb_args(n: int, b: int, L: int) -> None:
    if L < 1:
        raise InvalidConfigurationError(f"block length L={L} must be >= 1")
    if L > b:
        raise InvalidConfigurationError(f"block length L={L} exceeds subset size b={b}")
    if b > n:
        raise InvalidConfigurationError(f"subset size b={b} exceeds nominal size n={n}")


def draw_mbb_offsets(n: int, b: int, L: int, rng: np.random.Generator) -> np.ndarray:
    """``ceil(n/L)`` block start offsets, i.i.d. uniform on ``{0, ..., b-L}``."""
    _check_mbb_args(n, b, L)
    k = -(-n // L)
    return rng.integers(0, b - L + 1, size=k)


def mbb_weights_from_offsets(n: int, b: int, L: int, offsets) -> WeightVector:
    """Tile blocks of length ``L`` at ``offsets``; the last block is truncated
    to ``n - (K-1)*L`` so the frequencies sum to ``n`` exactly."""
    _check_mbb_args(n, b, L)
    offsets = np.asarray(offsets, dtype=np.int64)
    k = offsets.shape[0]
    if k != -(-n // L):
        raise InvalidConfigurationError(f"expected {-(-n // L)} offsets, got {k}")
    if k and (offsets.min() < 0 or offsets.max() > b - L):
        raise InvalidConfigurationError("block offsets must lie in [0, b-L]")
    last = n - (k - 1) * L
    # difference array: +1 at block start, -1 one past its end
    diff = np.bincount(offsets[:-1], minlength=b + 1) - np.bincount(
        offsets[:-1] + L, minlength=b + 1
    )
    diff[offsets[-1]] += 1
    diff[offsets[-1] + last] -= 1
    w = np.cumsum(diff[:b])
    return WeightVector(w, n)


def draw_mbb_weights(n: int, b: int, L: int, rng: np.random.Generator) -> WeightVector:
    """Moving-block resample weights of nominal size ``n`` over ``b`` rows."""
    return mbb_weights_from_offsets(n, b, L, draw_mbb_offsets(n, b, L, rng))
