"""Integer-accumulator superposition with majority-rule binarization.

A :class:`Bundle` keeps one signed counter per dimension plus the net number
``n`` of vectors bundled in (minus those bundled out). Counters are signed
even though pure accumulation never goes negative: training subtracts sample
vectors from class bundles, and signed counts keep bundle-in/bundle-out exact
inverses. The majority test compares ``2 * counts[d]`` against ``n`` in
integer arithmetic, so no floating point is involved:

    bit d = 1  if 2*counts[d] > n
    bit d = 0  if 2*counts[d] < n
    bit d ~ fair coin from the caller's rng on ties (2*counts[d] == n)

Ties can only occur when ``n`` is even (all bundled items are binary), so
binarizing an odd-count bundle is fully deterministic.
"""

from __future__ import annotations

import numpy as np

from .hdvec import Hypervector, pack_bits

__all__ = ["Bundle", "binarize_counts"]


def binarize_counts(counts: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Majority-rule bits for raw counters; tie draws in ascending dim order."""
    doubled = 2 * counts
    bits = (doubled > n).astype(np.uint8)
    ties = np.flatnonzero(doubled == n)
    if ties.size:
        bits[ties] = rng.integers(0, 2, size=ties.size, dtype=np.uint8)
    return bits


class Bundle:
    """Single-owner mutable accumulator over hypervectors of one dimension."""

    __slots__ = ("dim", "counts", "n")

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"bundle dimension must be >= 1, got {dim}")
        self.dim = dim
        self.counts = np.zeros(dim, dtype=np.int64)
        self.n = 0

    @classmethod
    def from_counts(cls, counts: np.ndarray, n: int) -> Bundle:
        counts = np.asarray(counts, dtype=np.int64)
        b = cls(counts.size)
        b.counts = counts.copy()
        b.n = int(n)
        return b

    def copy(self) -> Bundle:
        return Bundle.from_counts(self.counts, self.n)

    def _check_dim(self, v: Hypervector) -> None:
        if v.dim != self.dim:
            raise ValueError(f"dimension mismatch: bundle {self.dim}, vector {v.dim}")

    def bundle_in(self, v: Hypervector) -> Bundle:
        """Element-wise add ``v``; increments the net count."""
        self._check_dim(v)
        self.counts += v.to_bits()
        self.n += 1
        return self

    def bundle_out(self, v: Hypervector) -> Bundle:
        """Element-wise subtract ``v``; decrements the net count.

        Exact inverse of :meth:`bundle_in`; counts may go negative.
        """
        self._check_dim(v)
        self.counts -= v.to_bits()
        self.n -= 1
        return self

    def permute(self) -> Bundle:
        """Rotate the counters by one position toward higher index.

        Used by n-gram encoding, where the accumulator is rotated once per
        step before the next vector is bundled in. ``n`` is unchanged.
        """
        self.counts = np.roll(self.counts, 1)
        return self

    def binarize(self, rng: np.random.Generator) -> Hypervector:
        """Collapse to a hypervector with the majority rule (ties random)."""
        return Hypervector(self.dim, pack_bits(binarize_counts(self.counts, self.n, rng)))

    def is_empty(self) -> bool:
        return self.n == 0 and not self.counts.any()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Bundle):
            return NotImplemented
        return self.dim == other.dim and self.n == other.n and bool(
            np.array_equal(self.counts, other.counts)
        )

    def __repr__(self) -> str:
        return f"Bundle(dim={self.dim}, n={self.n})"
