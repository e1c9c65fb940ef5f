"""Region-sensing actions: contiguous rectangles with unit l2 sensing power.

An action covers a contiguous axis-aligned rectangle of the grid with a uniform
weight w = 1/sqrt(area), so that the dense sensing vector always has unit norm.
Three enumeration schemes are provided; `dyadic` is the default used by every
policy (power-of-two side lengths at aligned offsets).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from .errors import ActionSetSizeError, InvalidActionError, InvalidParameterError
from .grid import GridShape

SCHEMES = ("dyadic", "all", "point")

# all-contiguous enumeration is quadratic per dimension; refuse huge grids
ALL_CONTIGUOUS_MAX_N = 4096


@dataclass(frozen=True, order=True)
class RegionAction:
    """Rectangle at `offset` with side lengths `extent`, uniform weight 1/sqrt(area)."""

    offset: tuple[int, ...]
    extent: tuple[int, ...]

    @property
    def area(self) -> int:
        return int(np.prod(self.extent))

    @property
    def weight(self) -> float:
        return 1.0 / np.sqrt(self.area)

    def validate(self, shape: GridShape) -> None:
        if len(self.offset) != shape.ndim or len(self.extent) != shape.ndim:
            raise InvalidActionError(f"action rank {len(self.offset)} does not match grid {shape}")
        for o, e, n_i in zip(self.offset, self.extent, shape.dims):
            if o < 0 or e < 1 or o + e > n_i:
                raise InvalidActionError(f"rectangle {self.offset}+{self.extent} exceeds grid {shape}")

    def cells(self, shape: GridShape) -> np.ndarray:
        """Flat indices covered by the rectangle, row-major order."""
        ranges = [range(o, o + e) for o, e in zip(self.offset, self.extent)]
        return np.array([shape.ravel(c) for c in product(*ranges)], dtype=int)


def to_dense(action: RegionAction, shape: GridShape) -> np.ndarray:
    """Dense sensing vector of length n: weight inside the rectangle, zero outside."""
    action.validate(shape)
    x = np.zeros(shape.n)
    x[action.cells(shape)] = action.weight
    return x


class ActionSet:
    """Immutable, deduplicated list of actions with a lazily cached dense matrix."""

    def __init__(self, scheme: str, actions: Sequence[RegionAction], shape: GridShape):
        self.scheme = scheme
        self.shape = shape
        self._actions = tuple(actions)
        self._dense: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._actions)

    def __iter__(self) -> Iterator[RegionAction]:
        return iter(self._actions)

    def __getitem__(self, i: int) -> RegionAction:
        return self._actions[i]

    def __contains__(self, a: RegionAction) -> bool:
        return a in set(self._actions)

    def dense_matrix(self) -> np.ndarray:
        """|X| x n matrix whose rows are the dense sensing vectors (cached)."""
        if self._dense is None:
            self._dense = np.stack([to_dense(a, self.shape) for a in self._actions])
        return self._dense

    def index(self, a: RegionAction) -> int:
        return self._actions.index(a)


def _dyadic_intervals(n: int) -> list[tuple[int, int]]:
    """(offset, length) pairs of length 2^j at offsets multiple of 2^j, clipped at n."""
    out = []
    length = 1
    while length <= n:
        for off in range(0, n, length):
            out.append((off, min(length, n - off)))
        length *= 2
    return out


def _all_intervals(n: int) -> list[tuple[int, int]]:
    return [(off, ln) for off in range(n) for ln in range(1, n - off + 1)]


def _point_intervals(n: int) -> list[tuple[int, int]]:
    return [(off, 1) for off in range(n)]


def enumerate_actions(shape: GridShape, scheme: str = "dyadic") -> ActionSet:
    """Enumerate the feasible actions under the given scheme.

    dyadic: per-dimension intervals of length 2^j at offsets that are multiples
    of 2^j (clipped and re-normalized at a non-power-of-two boundary), crossed
    over dimensions.  all: every contiguous rectangle.  point: single cells.
    """
    if scheme not in SCHEMES:
        raise InvalidParameterError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "all" and shape.n > ALL_CONTIGUOUS_MAX_N:
        raise ActionSetSizeError(
            f"all-contiguous enumeration on n={shape.n} exceeds guard {ALL_CONTIGUOUS_MAX_N}"
        )
    per_dim = {
        "dyadic": _dyadic_intervals,
        "all": _all_intervals,
        "point": _point_intervals,
    }[scheme]
    axes = [per_dim(n_i) for n_i in shape.dims]
    seen: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
    actions: list[RegionAction] = []
    for combo in product(*axes):
        offset = tuple(c[0] for c in combo)
        extent = tuple(c[1] for c in combo)
        if (offset, extent) in seen:
            continue
        seen.add((offset, extent))
        actions.append(RegionAction(offset=offset, extent=extent))
    # smallest area first, then offset: the tie-break order used by all policies
    actions.sort(key=lambda a: (a.area, a.offset, a.extent))
    return ActionSet(scheme=scheme, actions=actions, shape=shape)
