"""Saturating mid-tread quantizers and fixed-point round-off.

A quantizer maps a real signal onto an integer level ``k`` whose
representative value is ``offset + k * delta``.  Levels are clamped to
``[min_level, saturation]``; by default ``min_level = -saturation``, which
is the symmetric quantizer with sensitivity ``delta`` and saturation ``M``.

Word-length constructors build the converter found in an A/D or D/A stage:
a ``w``-bit converter over ``[lo, hi]`` has ``delta = (hi - lo) / 2**w`` and
representable values ``lo + j * delta`` for ``j = 0 .. 2**w - 1``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, RangeError

__all__ = [
    "RoundingMode",
    "QuantizerSpec",
    "VectorQuantizerSpec",
    "quantize",
    "dequantize",
    "quantize_vector",
    "dequantize_vector",
    "fixed_point_multiply",
]


class RoundingMode(enum.Enum):
    ROUND_HALF_UP = "round"
    TRUNCATE = "truncate"


@dataclass(frozen=True)
class QuantizerSpec:
    """Scalar quantizer.

    Parameters
    ----------
    delta : float
        Sensitivity, the width of one quantization interval.
    saturation : int
        Largest output level ``M``.
    mode : RoundingMode
        ``ROUND_HALF_UP`` gives ``floor(x/delta + 1/2)`` (ties go toward
        +inf); ``TRUNCATE`` gives ``floor(x/delta)``.
    offset : float
        Value represented by level 0.
    min_level : int, optional
        Smallest output level.  Defaults to ``-saturation``.
    """

    delta: float
    saturation: int
    mode: RoundingMode = RoundingMode.ROUND_HALF_UP
    offset: float = 0.0
    min_level: int | None = None

    def __post_init__(self):
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise DomainError(f"delta must be positive, got {self.delta}")
        if int(self.saturation) != self.saturation or self.saturation < 0:
            raise DomainError(f"saturation must be a nonnegative integer, got {self.saturation}")
        if self.min_level is None:
            object.__setattr__(self, "min_level", -int(self.saturation))
        if self.min_level > self.saturation:
            raise DomainError("min_level exceeds saturation")
        object.__setattr__(self, "mode", RoundingMode(self.mode))

    @classmethod
    def from_word_length(cls, bits: int, lo: float, hi: float, mode=RoundingMode.ROUND_HALF_UP,
                         signed: bool | None = None) -> "QuantizerSpec":
        """``bits``-wide converter over ``[lo, hi]``.

        Both numberings represent the same value lattice ``lo + j*delta``;
        ``signed`` only chooses where level 0 sits.  Signed converters put
        level 0 at the range midpoint with two's-complement limits
        ``-2**(bits-1) .. 2**(bits-1) - 1``; unsigned ones anchor level 0 at
        ``lo``.  By default a range straddling zero is signed.
        """
        if bits < 1:
            raise DomainError("word length must be at least one bit")
        if not hi > lo:
            raise DomainError(f"empty range [{lo}, {hi}]")
        delta = (hi - lo) / 2**bits
        if signed is None:
            signed = lo < 0 < hi
        if signed:
            half = 2 ** (bits - 1)
            return cls(delta, half - 1, mode, offset=(lo + hi) / 2, min_level=-half)
        return cls(delta, 2**bits - 1, mode, offset=float(lo), min_level=0)

    @property
    def n_levels(self) -> int:
        return self.saturation - self.min_level + 1

    def values(self) -> np.ndarray:
        """All representable values, ascending."""
        return self.offset + np.arange(self.min_level, self.saturation + 1) * self.delta


_SNAP = 1e-9


def quantize(x, q: QuantizerSpec):
    """Integer level of ``x`` (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("cannot quantize a non-finite value")
    # within _SNAP of a level boundary counts as on it, absorbing float error
    scaled = (arr - q.offset) / q.delta + _SNAP
    if q.mode is RoundingMode.ROUND_HALF_UP:
        k = np.floor(scaled + 0.5)
    else:
        k = np.floor(scaled)
    k = np.clip(k, q.min_level, q.saturation).astype(np.int64)
    return int(k) if k.ndim == 0 else k


def dequantize(level, q: QuantizerSpec):
    """Representative value ``offset + level * delta``."""
    lv = np.asarray(level)
    if np.any(lv < q.min_level) or np.any(lv > q.saturation):
        raise RangeError(f"level outside [{q.min_level}, {q.saturation}]")
    v = q.offset + lv * q.delta
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class VectorQuantizerSpec:
    """Componentwise quantizer, one :class:`QuantizerSpec` per axis."""

    components: tuple[QuantizerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise DomainError("vector quantizer needs at least one component")

    @classmethod
    def uniform(cls, n: int, q: QuantizerSpec) -> "VectorQuantizerSpec":
        return cls((q,) * n)

    @classmethod
    def from_word_lengths(cls, bits: Sequence[int], ranges: Sequence[tuple[float, float]],
                          mode=RoundingMode.ROUND_HALF_UP) -> "VectorQuantizerSpec":
        return cls(tuple(QuantizerSpec.from_word_length(b, lo, hi, mode) for b, (lo, hi) in zip(bits, ranges)))

    def __len__(self):
        return len(self.components)


def _check_dim(x, vq):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != len(vq):
        raise DomainError(f"expected {len(vq)} components, got shape {arr.shape}")
    return arr


def quantize_vector(x, vq: VectorQuantizerSpec) -> np.ndarray:
    """Quantize the last axis of ``x`` componentwise; works on ``(n,)`` and ``(N, n)``."""
    arr = _check_dim(x, vq)
    out = np.empty(arr.shape, dtype=np.int64)
    for i, q in enumerate(vq.components):
        out[..., i] = quantize(arr[..., i], q)
    return out


def dequantize_vector(levels, vq: VectorQuantizerSpec) -> np.ndarray:
    lv = np.asarray(levels)
    if lv.ndim == 0 or lv.shape[-1] != len(vq):
        raise DomainError(f"expected {len(vq)} components, got shape {lv.shape}")
    out = np.empty(lv.shape, dtype=float)
    for i, q in enumerate(vq.components):
        out[..., i] = dequantize(lv[..., i], q)
    return out


def requantize(x, q: QuantizerSpec):
    """Round ``x`` onto the value lattice of ``q`` (quantize then dequantize)."""
    return dequantize(quantize(x, q), q)


def requantize_vector(x, vq: VectorQuantizerSpec) -> np.ndarray:
    return dequantize_vector(quantize_vector(x, vq), vq)


def fixed_point_multiply(a, b, q: QuantizerSpec):
    """Product ``a*b`` rounded onto the fixed-point lattice of ``q``."""
    return requantize(np.multiply(a, b), q)
