"""Uniform cell partitions of a box in state space.

Regular cells are integer tuples ``z`` with ``0 <= z[i] < axes[i].cells``,
flattened row-major with axis 0 most significant.  Everything outside the
box is the single aggregate sink cell, ``SINK = -1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, RangeError
from .quantization import QuantizerSpec, VectorQuantizerSpec

SINK = -1

__all__ = ["SINK", "AxisSpec", "CellSpace"]


@dataclass(frozen=True)
class AxisSpec:
    lo: float
    hi: float
    cells: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise DomainError(f"axis needs lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.cells) != self.cells or self.cells < 1:
            raise DomainError(f"axis needs a positive cell count, got {self.cells}")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.cells

    @classmethod
    def from_bits(cls, lo: float, hi: float, bits: int) -> "AxisSpec":
        return cls(lo, hi, 2**bits)

    @classmethod
    def from_quantizer(cls, q: QuantizerSpec) -> "AxisSpec":
        """Axis whose cells are exactly the quantization intervals of ``q``.

        Cell centers coincide with the quantizer's representable values.
        """
        lo = q.offset + (q.min_level - 0.5) * q.delta
        return cls(lo, lo + q.n_levels * q.delta, q.n_levels)


class CellSpace:
    """Finite cell partition of the box ``prod [lo_i, hi_i]`` plus a sink."""

    def __init__(self, axes: Sequence[AxisSpec]):
        self.axes = tuple(axes)
        if not self.axes:
            raise DomainError("cell space needs at least one axis")
        self.shape = tuple(a.cells for a in self.axes)
        self.total = int(np.prod(self.shape))
        self.lo = np.array([a.lo for a in self.axes])
        self.hi = np.array([a.hi for a in self.axes])
        self.widths = np.array([a.width for a in self.axes])

    @classmethod
    def from_bits(cls, spec: Sequence[tuple[float, float, int]]) -> "CellSpace":
        """One ``(lo, hi, bits)`` triple per axis."""
        return cls([AxisSpec.from_bits(lo, hi, b) for lo, hi, b in spec])

    @classmethod
    def from_quantizers(cls, vq: VectorQuantizerSpec) -> "CellSpace":
        return cls([AxisSpec.from_quantizer(q) for q in vq.components])

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def __repr__(self):
        parts = ", ".join(f"[{a.lo:g}, {a.hi:g}]/{a.cells}" for a in self.axes)
        return f"CellSpace({parts})"

    def __eq__(self, other):
        return isinstance(other, CellSpace) and self.axes == other.axes

    def __hash__(self):
        return hash(self.axes)

    # -- index arithmetic -------------------------------------------------

    def flat_index(self, z) -> int:
        z = tuple(int(v) for v in z)
        if len(z) != self.ndim:
            raise DomainError(f"expected a {self.ndim}-tuple, got {z}")
        for v, n in zip(z, self.shape):
            if not 0 <= v < n:
                raise RangeError(f"cell coordinate {z} outside shape {self.shape}")
        return int(np.ravel_multi_index(z, self.shape))

    def tuple_of(self, c: int) -> tuple[int, ...]:
        if not 0 <= c < self.total:
            raise RangeError(f"flat index {c} outside [0, {self.total})")
        return tuple(int(v) for v in np.unravel_index(int(c), self.shape))

    def coords(self, cells=None) -> np.ndarray:
        """``(N, n)`` integer coordinates of ``cells`` (default: all cells)."""
        if cells is None:
            cells = np.arange(self.total)
        return np.stack(np.unravel_index(np.asarray(cells), self.shape), axis=-1)

    # -- geometry ---------------------------------------------------------

    def cells_of(self, X) -> np.ndarray:
        """Vectorised :meth:`cell_of` for an ``(N, n)`` array.

        Rows that are non-finite or outside the box map to SINK.
        """
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.ndim:
            raise DomainError(f"expected (N, {self.ndim}) states, got {X.shape}")
        with np.errstate(invalid="ignore"):
            inside = np.all((X >= self.lo) & (X <= self.hi), axis=1)
            z = np.floor((np.where(inside[:, None], X, self.lo) - self.lo) / self.widths).astype(np.int64)
        # closed top edge
        z = np.minimum(z, np.array(self.shape) - 1)
        flat = np.ravel_multi_index(z.T, self.shape)
        return np.where(inside, flat, SINK).astype(np.int64)

    def cell_of(self, x) -> int:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.ndim:
            raise DomainError(f"expected {self.ndim} coordinates, got {x.shape[0]}")
        if not np.all(np.isfinite(x)):
            raise DomainError("non-finite coordinate")
        return int(self.cells_of(x[None, :])[0])

    def centers(self, cells=None) -> np.ndarray:
        """``(N, n)`` center points of ``cells`` (default: all cells)."""
        return self.lo + (self.coords(cells) + 0.5) * self.widths

    def center_of(self, c: int) -> np.ndarray:
        if c == SINK:
            raise DomainError("the sink cell has no center")
        self.tuple_of(c)
        return self.centers([c])[0]

    def nearest_cell(self, point=None) -> int:
        """Cell whose center is nearest ``point`` (default origin).

        Distance is separable, so the nearest center is found axis by axis;
        ties resolve to the lower coordinate and hence the lower flat index.
        """
        p = np.zeros(self.ndim) if point is None else np.asarray(point, dtype=float)
        z = []
        for i, a in enumerate(self.axes):
            c = a.lo + (np.arange(a.cells) + 0.5) * a.width
            z.append(int(np.argmin(np.abs(c - p[i]))))
        return self.flat_index(z)

    def scaled_box(self, factor: float) -> tuple[np.ndarray, np.ndarray]:
        """The box scaled about its midpoint, used as a divergence guard."""
        mid = (self.lo + self.hi) / 2
        half = (self.hi - self.lo) / 2 * factor
        return mid - half, mid + half
