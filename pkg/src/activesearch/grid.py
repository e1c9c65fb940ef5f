"""Search grid, ground-truth sparse signal, and the noisy region-sensing observation model.

The environment is a d-dimensional grid (d in {1, 2}) flattened row-major into a
vector of length n.  A sensing action measures the unit-power average of one
contiguous rectangle and returns that inner product plus Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidParameterError, InvalidSparsityError


@dataclass(frozen=True)
class GridShape:
    """Grid dimensions (n1, ..., nd) with row-major flattening, d <= 2."""

    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]):
        dims = tuple(int(d) for d in dims)
        if len(dims) == 0 or len(dims) > 2:
            raise InvalidParameterError(f"grid must be 1- or 2-dimensional, got dims={dims}")
        if any(d < 1 for d in dims):
            raise InvalidParameterError(f"grid dimensions must be positive, got dims={dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n(self) -> int:
        return int(np.prod(self.dims))

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def ravel(self, coords: Sequence[int]) -> int:
        """Row-major flat index of a coordinate tuple."""
        return int(np.ravel_multi_index(tuple(coords), self.dims))

    def unravel(self, index: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(index, self.dims))

    def __str__(self) -> str:
        return "x".join(str(d) for d in self.dims)


@dataclass(frozen=True)
class SparseSignal:
    """Ground-truth k-sparse vector over the flattened grid."""

    values: np.ndarray
    support: frozenset[int]
    k: int

    def __post_init__(self):
        if len(self.support) != self.k:
            raise InvalidSparsityError(f"|support|={len(self.support)} does not match k={self.k}")


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian observation noise with variance sigma2 >= 0."""

    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise InvalidParameterError(f"sigma2 must be >= 0, got {self.sigma2}")


@dataclass(frozen=True)
class Measurement:
    """One completed sensing task: the action taken and the scalar observed."""

    action: "RegionAction"  # noqa: F821 - actions module imports this one
    y: float
    t: int
    agent_id: int
    issue_time: float = 0.0
    finish_time: float = 0.0

    def __post_init__(self):
        if self.finish_time < self.issue_time:
            raise InvalidParameterError("finish_time must be >= issue_time")


class MeasurementSet:
    """Append-only shared history of measurements, in completion order."""

    def __init__(self, measurements: Sequence[Measurement] = ()):
        self._items: list[Measurement] = list(measurements)
        self._seen: set[int] = {m.t for m in self._items}

    def append(self, m: Measurement) -> None:
        if m.t in self._seen:
            raise InvalidParameterError(f"duplicate measurement index t={m.t}")
        self._seen.add(m.t)
        self._items.append(m)

    def prefix(self, count: int) -> "MeasurementSet":
        """The first `count` measurements in completion order (shared, read-only use)."""
        return MeasurementSet(self._items[:count])

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Measurement]:
        return iter(self._items)

    def __getitem__(self, i) -> Measurement:
        return self._items[i]


def generate_signal(
    shape: GridShape,
    k: int,
    rng: np.random.Generator,
    magnitude_range: tuple[float, float] | None = None,
) -> SparseSignal:
    """Draw a k-sparse signal with a uniform random support.

    Nonzero values are 1.0 unless `magnitude_range` is given, in which case they
    are drawn uniformly from that interval (robustness-run hook).
    """
    n = shape.n
    if k < 1 or k > n:
        raise InvalidSparsityError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    support = rng.choice(n, size=k, replace=False)
    values = np.zeros(n)
    if magnitude_range is None:
        values[support] = 1.0
    else:
        lo, hi = magnitude_range
        values[support] = rng.uniform(lo, hi, size=k)
    return SparseSignal(values=values, support=frozenset(int(i) for i in support), k=k)


def observe(
    signal: SparseSignal,
    action: "RegionAction",  # noqa: F821
    noise: NoiseModel,
    rng: np.random.Generator,
    shape: GridShape,
) -> float:
    """Return y = x^T beta + eps with eps ~ N(0, sigma2); exact when sigma2 = 0."""
    from .actions import to_dense

    x = to_dense(action, shape)
    y = float(x @ signal.values)
    if noise.sigma2 > 0:
        y += rng.normal(0.0, np.sqrt(noise.sigma2))
    return y


def assemble(D: MeasurementSet, shape: GridShape) -> tuple[np.ndarray, np.ndarray]:
    """Stack history D into the dense design matrix X (|D| x n) and observation vector y."""
    from .actions import to_dense

    n = shape.n
    if len(D) == 0:
        return np.zeros((0, n)), np.zeros(0)
    X = np.stack([to_dense(m.action, shape) for m in D])
    y = np.array([m.y for m in D])
    return X, y
