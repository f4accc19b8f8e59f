"""Bit-packed binary hypervectors and their arithmetic primitives.

A hypervector is a dense binary vector of dimension D (typically 10,000),
stored packed into 64-bit words. Logical bit d lives in word d // 64 at bit
position d % 64 (little-endian bit order within each word); unused padding
bits of the last word are always zero.

Primitives:
    random_hv   i.i.d. fair bits; two independent draws are pseudo-orthogonal
                (similarity near 0.5) at high dimension
    hamming     number of differing positions, via word-wise XOR + popcount
    similarity  1 - hamming / D, in [0, 1]
    bind        element-wise XOR; self-inverse and exactly distance-preserving
    permute     cyclic rotation toward higher index; popcount-preserving

Randomness policy: all draws flow through ``numpy.random.Generator`` (PCG64).
``make_rng(seed)`` builds the root stream for a run; ``derive_rng(seed, *tags)``
builds independent, reproducible sub-streams keyed by purpose tags so that
adding instrumentation never perturbs existing streams.
"""

from __future__ import annotations

import hashlib

import numpy as np

WORD_BITS = 64


def n_words(dim: int) -> int:
    """Number of 64-bit words needed for ``dim`` logical bits."""
    return (dim + WORD_BITS - 1) // WORD_BITS


def _pad_mask(dim: int) -> np.ndarray:
    """Per-word mask with ones on the ``dim`` logical bits only."""
    mask = np.full(n_words(dim), ~np.uint64(0), dtype=np.uint64)
    tail = dim % WORD_BITS
    if tail:
        mask[-1] = (np.uint64(1) << np.uint64(tail)) - np.uint64(1)
    return mask


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack an array of 0/1 values into uint64 words (padding zeroed)."""
    bits = np.asarray(bits, dtype=np.uint8)
    dim = bits.shape[-1]
    padded_len = n_words(dim) * WORD_BITS
    if padded_len != dim:
        pad = np.zeros(bits.shape[:-1] + (padded_len - dim,), dtype=np.uint8)
        bits = np.concatenate([bits, pad], axis=-1)
    return np.packbits(bits, axis=-1, bitorder="little").view(np.uint64)


def unpack_bits(words: np.ndarray, dim: int) -> np.ndarray:
    """Unpack uint64 words back to a 0/1 uint8 array of length ``dim``."""
    bits = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return bits[..., :dim]


if hasattr(np, "bitwise_count"):
    def popcount_words(words: np.ndarray) -> np.ndarray:
        return np.bitwise_count(words)
else:  # numpy < 2.0
    _BYTE_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

    def popcount_words(words: np.ndarray) -> np.ndarray:
        counts = _BYTE_POPCOUNT[words.view(np.uint8)]
        return counts.reshape(words.shape + (8,)).sum(axis=-1, dtype=np.uint64)


class Hypervector:
    """Immutable bit-packed binary vector of ``dim`` logical bits."""

    __slots__ = ("dim", "words")

    def __init__(self, dim: int, words: np.ndarray):
        if dim < 1:
            raise ValueError(f"hypervector dimension must be >= 1, got {dim}")
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (n_words(dim),):
            raise ValueError(
                f"expected {n_words(dim)} words for dim={dim}, got shape {words.shape}"
            )
        self.dim = dim
        self.words = words
        self.words.flags.writeable = False

    @classmethod
    def from_bits(cls, bits) -> Hypervector:
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size < 1:
            raise ValueError("bits must be a non-empty 1-d array")
        return cls(bits.size, pack_bits(bits))

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.dim)

    def popcount(self) -> int:
        return int(popcount_words(self.words).sum())

    def complement(self) -> Hypervector:
        """Bitwise NOT on the logical bits (padding stays zero)."""
        return Hypervector(self.dim, ~self.words & _pad_mask(self.dim))

    def __invert__(self) -> Hypervector:
        return self.complement()

    def __xor__(self, other: Hypervector) -> Hypervector:
        return bind(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.dim, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"Hypervector(dim={self.dim}, popcount={self.popcount()})"

    def to_hex(self) -> str:
        """Debug dump: ``"<dim>:<hex>"``, packed words little-endian."""
        return f"{self.dim}:{self.words.astype('<u8').tobytes().hex()}"

    @classmethod
    def from_hex(cls, dump: str) -> Hypervector:
        dim_str, _, payload = dump.partition(":")
        dim = int(dim_str)
        words = np.frombuffer(bytes.fromhex(payload), dtype="<u8").astype(np.uint64)
        return cls(dim, words)


def make_rng(seed: int) -> np.random.Generator:
    """Root random stream for a run; identical seed, identical stream."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.default_rng(seed)


def derive_rng(seed: int, *tags) -> np.random.Generator:
    """Independent sub-stream keyed by ``seed`` and purpose tags.

    Tags are hashed so that, e.g., stream ("encode", 17) never collides with
    ("cim", 17). Streams are stable across processes and platforms.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    digest = hashlib.blake2b("/".join(str(t) for t in tags).encode(), digest_size=8)
    tag_key = int.from_bytes(digest.digest(), "little")
    return np.random.default_rng(np.random.SeedSequence([seed, tag_key]))


def random_hv(dim: int, rng: np.random.Generator) -> Hypervector:
    """Draw a hypervector with each bit independently 1 with probability 0.5."""
    if dim < 1:
        raise ValueError(f"hypervector dimension must be >= 1, got {dim}")
    bits = rng.integers(0, 2, size=dim, dtype=np.uint8)
    return Hypervector(dim, pack_bits(bits))


def _check_dims(v1: Hypervector, v2: Hypervector) -> None:
    if v1.dim != v2.dim:
        raise ValueError(f"dimension mismatch: {v1.dim} != {v2.dim}")


def hamming(v1: Hypervector, v2: Hypervector) -> int:
    """Count of positions where the two vectors differ."""
    _check_dims(v1, v2)
    return int(popcount_words(v1.words ^ v2.words).sum())


def similarity(v1: Hypervector, v2: Hypervector) -> float:
    """1 - hamming / D; 1.0 identical, 0.0 complementary, ~0.5 unrelated."""
    _check_dims(v1, v2)
    return 1.0 - hamming(v1, v2) / v1.dim


def bind(v1: Hypervector, v2: Hypervector) -> Hypervector:
    """Element-wise XOR. Self-inverse; preserves Hamming distance exactly."""
    _check_dims(v1, v2)
    return Hypervector(v1.dim, v1.words ^ v2.words)


def permute(v: Hypervector, k: int) -> Hypervector:
    """Cyclic rotation by ``k`` positions toward higher index.

    Bit d of the result equals bit (d - k) mod D of the input; popcount is
    preserved and the map is a bijection.
    """
    k = k % v.dim
    if k == 0:
        return v
    return Hypervector(v.dim, pack_bits(np.roll(v.to_bits(), k)))


def stack_words(vectors) -> np.ndarray:
    """Stack equal-dim hypervectors into an (m, W) packed uint64 matrix."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("cannot stack an empty sequence of hypervectors")
    dim = vectors[0].dim
    for v in vectors:
        if v.dim != dim:
            raise ValueError(f"dimension mismatch: {v.dim} != {dim}")
    return np.stack([v.words for v in vectors])


def hamming_to_rows(packed: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Hamming distance from one packed vector to every row of a packed matrix."""
    return popcount_words(packed ^ words).sum(axis=1, dtype=np.int64)
