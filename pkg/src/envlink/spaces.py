"""Observation/action space descriptors: Discrete counts and bounded boxes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .prng import SplitMix64
from .values import DTYPES, Tensor, Value


@dataclass(frozen=True)
class Discrete:
    """Finite action set {0, 1, ..., n-1}."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise ValueError(f"Discrete.n must be a positive integer, got {self.n!r}")


@dataclass(frozen=True)
class Box:
    """Bounded continuous (or integer) tensor domain.

    ``low`` and ``high`` are tensors of the declared shape and dtype with
    ``low[i] <= high[i]`` elementwise.
    """

    low: Tensor
    high: Tensor

    def __post_init__(self):
        if self.low.dtype != self.high.dtype:
            raise ValueError("Box low/high dtypes differ")
        if self.low.shape != self.high.shape:
            raise ValueError("Box low/high shapes differ")
        if any(d < 1 for d in self.low.shape):
            raise ValueError("Box dimensions must be positive")
        if np.any(self.low.array > self.high.array):
            raise ValueError("Box requires low <= high elementwise")

    @property
    def dtype(self) -> str:
        return self.low.dtype

    @property
    def shape(self) -> tuple[int, ...]:
        return self.low.shape

    @classmethod
    def of(cls, low, high, shape: tuple[int, ...], dtype: str = "f64") -> "Box":
        """Build a Box, broadcasting scalar bounds over *shape*."""
        lo = np.broadcast_to(np.asarray(low, dtype=DTYPES[dtype]), shape)
        hi = np.broadcast_to(np.asarray(high, dtype=DTYPES[dtype]), shape)
        return cls(Tensor(lo, dtype=dtype), Tensor(hi, dtype=dtype))


Space = Union[Discrete, Box]


def contains(space: Space, value: Value) -> bool:
    """True iff *value* is a member of *space*."""
    if isinstance(space, Discrete):
        return (
            isinstance(value, int)
            and not isinstance(value, bool)
            and 0 <= value < space.n
        )
    if isinstance(space, Box):
        if not isinstance(value, Tensor):
            return False
        if value.dtype != space.dtype or value.shape != space.shape:
            return False
        arr = value.array
        return bool(np.all(arr >= space.low.array) and np.all(arr <= space.high.array))
    raise TypeError(f"not a space: {space!r}")


def sample(space: Space, rng: SplitMix64) -> Value:
    """Draw a uniform member of *space* from the pinned PRNG stream.

    The draw recipe is part of the cross-implementation contract:
    Discrete consumes one uniform; Box consumes one uniform per element in
    row-major order, each mapped as ``low + u * (high - low)`` in binary64
    before casting to the box dtype (round for floats, truncate for ints).
    """
    if isinstance(space, Discrete):
        return int(rng.uniform() * space.n)
    if isinstance(space, Box):
        lo = np.ravel(space.low.array).astype(np.float64)
        hi = np.ravel(space.high.array).astype(np.float64)
        out = np.empty(lo.size, dtype=np.float64)
        for i in range(lo.size):
            out[i] = lo[i] + rng.uniform() * (hi[i] - lo[i])
        cast = out.astype(DTYPES[space.dtype])
        return Tensor(cast.reshape(space.shape), dtype=space.dtype)
    raise TypeError(f"not a space: {space!r}")
