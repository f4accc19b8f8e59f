"""Item memories, level memories with linear similarity mapping, quantization.

An :class:`ItemMemory` holds independent random hypervectors for nominal
symbols; pairs are pseudo-orthogonal (similarity near 0.5) at high dimension.

A :class:`LevelMemory` holds ``L`` ordered level vectors for ordinal or
quantized data. Level 0 is random; each subsequent level flips a fresh batch
of ``floor(D / (2*(L-1)))`` positions drawn without replacement from positions
never flipped before. Because flip sets are disjoint, the similarity profile
is exactly linear:

    similarity(levels[i], levels[j]) == 1 - flips * |i - j| / D

and the extreme levels land at orthogonality (0.5) when D is divisible by
2*(L-1). Positions left over by the floor are never flipped.

Continuous values are mapped to level indices by :func:`quantize` using a
:class:`QuantizationSchema`: the value is clamped to [v_min, v_max], offset,
divided by the step, and rounded half away from zero, which centers each
level on its representative value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hdvec import Hypervector, n_words, pack_bits, random_hv, unpack_bits

__all__ = [
    "ItemMemory",
    "LevelMemory",
    "QuantizationSchema",
    "build_im",
    "build_cim",
    "quantize",
    "quantize_many",
]


class ItemMemory:
    """Table of independent random hypervectors for nominal symbols."""

    __slots__ = ("dim", "packed")

    def __init__(self, dim: int, packed: np.ndarray):
        self.dim = dim
        self.packed = packed

    def __len__(self) -> int:
        return self.packed.shape[0]

    def vector(self, symbol: int) -> Hypervector:
        return Hypervector(self.dim, self.packed[symbol])


class LevelMemory:
    """Ordered level vectors with an exactly linear similarity profile."""

    __slots__ = ("dim", "L", "flips", "packed")

    def __init__(self, dim: int, L: int, flips: int, packed: np.ndarray):
        self.dim = dim
        self.L = L
        self.flips = flips
        self.packed = packed

    def __len__(self) -> int:
        return self.L

    def level(self, i: int) -> Hypervector:
        return Hypervector(self.dim, self.packed[i])

    def bits(self) -> np.ndarray:
        """All levels as an (L, D) uint8 matrix; used by batch encoding."""
        return unpack_bits(self.packed, self.dim)


def build_im(count: int, dim: int, rng: np.random.Generator) -> ItemMemory:
    """Build ``count`` independent random hypervectors."""
    if count < 1:
        raise ValueError(f"item memory needs at least one entry, got {count}")
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    packed = np.stack([random_hv(dim, rng).words for _ in range(count)])
    return ItemMemory(dim, packed)


def build_cim(L: int, dim: int, rng: np.random.Generator) -> LevelMemory:
    """Build an ``L``-level memory by disjoint incremental bit flips."""
    if L < 2:
        raise ValueError(f"level memory needs L >= 2, got {L}")
    if dim < 2 * (L - 1):
        raise ValueError(f"dim={dim} too small for L={L}: need dim >= {2 * (L - 1)}")
    flips = dim // (2 * (L - 1))
    base = random_hv(dim, rng).to_bits()
    order = rng.permutation(dim)
    levels = np.empty((L, dim), dtype=np.uint8)
    levels[0] = base
    bits = base.copy()
    for i in range(1, L):
        flip_at = order[(i - 1) * flips : i * flips]
        bits[flip_at] ^= 1
        levels[i] = bits
    packed = pack_bits(levels).reshape(L, n_words(dim))
    return LevelMemory(dim, L, flips, packed)


@dataclass(frozen=True)
class QuantizationSchema:
    """Inclusive value range plus step size; level count is derived."""

    v_min: float
    v_max: float
    step: float

    def __post_init__(self):
        if not (math.isfinite(self.v_min) and math.isfinite(self.v_max)):
            raise ValueError("quantization range must be finite")
        if self.step <= 0:
            raise ValueError(f"quantization step must be > 0, got {self.step}")
        if self.v_max <= self.v_min:
            raise ValueError("quantization range must satisfy v_max > v_min")
        if self.L < 2:
            raise ValueError("quantization schema must yield at least 2 levels")

    @property
    def L(self) -> int:
        return int(round((self.v_max - self.v_min) / self.step)) + 1

    def midpoint(self, index: int) -> float:
        """Representative value of a level; quantizes back to ``index``."""
        return self.v_min + index * self.step


def quantize(value: float, schema: QuantizationSchema) -> int:
    """Map one value to its level index in [0, L-1]; out-of-range clamps."""
    if not math.isfinite(value):
        raise ValueError(f"cannot quantize non-finite value {value!r}")
    clamped = min(max(value, schema.v_min), schema.v_max)
    # floor(q + 0.5) is round-half-away-from-zero for the non-negative offset
    index = math.floor((clamped - schema.v_min) / schema.step + 0.5)
    return min(max(index, 0), schema.L - 1)


def quantize_many(values: np.ndarray, schema: QuantizationSchema) -> np.ndarray:
    """Vectorized :func:`quantize` over an array of values."""
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise ValueError("cannot quantize non-finite values")
    clamped = np.clip(values, schema.v_min, schema.v_max)
    index = np.floor((clamped - schema.v_min) / schema.step + 0.5).astype(np.int64)
    return np.clip(index, 0, schema.L - 1)
