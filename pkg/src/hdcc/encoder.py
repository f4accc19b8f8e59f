"""Encoding of raw feature records into binarized sample hypervectors.

A record with n features is encoded by looking up, for each feature j, the
level vector of its quantized value in that feature's own level memory,
bundling all n level vectors, and binarizing with the majority rule. Records
can additionally be encoded as n-grams over a sliding window: the window
accumulator is rotated one position per step before the next (already
binarized) sample vector is bundled in, so earlier samples carry more
rotation and sequence order is retained.

Randomness policy for datasets: record i consumes the derived stream
``derive_rng(seed, "enc", i)`` and the window ending at record t consumes
``derive_rng(seed, "ngram", t)``. Tie draws happen in ascending dimension
order within each stream. This makes batch encoding bit-identical to
per-record encoding, independent of chunking or parallelism, and re-encoding
with the same seed is byte-for-byte reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundler import Bundle, binarize_counts
from .hdvec import Hypervector, derive_rng, n_words, pack_bits, stack_words, unpack_bits
from .memory import LevelMemory, QuantizationSchema, build_cim, quantize, quantize_many

__all__ = [
    "EncoderSchema",
    "EncodedDataset",
    "build_encoder",
    "encode_sample",
    "encode_ngram",
    "encode_window",
    "encode_records",
    "encode_windows",
]

_CHUNK = 1024


@dataclass(frozen=True)
class EncoderSchema:
    """Per-feature quantization plus level memories; optional n-gram length."""

    quants: tuple[QuantizationSchema, ...]
    cims: tuple[LevelMemory, ...]
    ngram: int | None = None

    def __post_init__(self):
        if len(self.quants) != len(self.cims):
            raise ValueError("one level memory is required per feature")
        if not self.cims:
            raise ValueError("encoder needs at least one feature")
        dims = {c.dim for c in self.cims}
        if len(dims) != 1:
            raise ValueError(f"level memories disagree on dimension: {sorted(dims)}")
        for q, c in zip(self.quants, self.cims):
            if q.L != c.L:
                raise ValueError(f"level count mismatch: schema {q.L}, memory {c.L}")
        if self.ngram is not None and self.ngram < 2:
            raise ValueError(f"ngram length must be >= 2, got {self.ngram}")

    @property
    def n_features(self) -> int:
        return len(self.quants)

    @property
    def dim(self) -> int:
        return self.cims[0].dim


@dataclass
class EncodedDataset:
    """Encoded samples as a packed (m, W) matrix plus their labels."""

    dim: int
    packed: np.ndarray
    labels: np.ndarray
    seed: int

    def __len__(self) -> int:
        return self.packed.shape[0]

    def sample(self, i: int) -> Hypervector:
        return Hypervector(self.dim, self.packed[i])

    def subset(self, indices: np.ndarray) -> EncodedDataset:
        return EncodedDataset(self.dim, self.packed[indices], self.labels[indices], self.seed)


def build_encoder(
    quants, dim: int, seed: int, ngram: int | None = None
) -> EncoderSchema:
    """Build one independent level memory per feature from purpose-tagged streams."""
    quants = tuple(quants)
    cims = tuple(
        build_cim(q.L, dim, derive_rng(seed, "cim", j)) for j, q in enumerate(quants)
    )
    return EncoderSchema(quants=quants, cims=cims, ngram=ngram)


def _validate_record(record: np.ndarray, schema: EncoderSchema) -> np.ndarray:
    record = np.asarray(record, dtype=np.float64)
    if record.shape != (schema.n_features,):
        raise ValueError(
            f"record has {record.shape} values, schema expects {schema.n_features}"
        )
    if not np.isfinite(record).all():
        raise ValueError("record contains non-finite values")
    return record


def encode_sample(
    record, schema: EncoderSchema, rng: np.random.Generator
) -> Hypervector:
    """Encode one record: quantize, look up levels, bundle, binarize."""
    record = _validate_record(record, schema)
    bundle = Bundle(schema.dim)
    for j in range(schema.n_features):
        level = quantize(float(record[j]), schema.quants[j])
        bundle.bundle_in(schema.cims[j].level(level))
    return bundle.binarize(rng)


def encode_ngram(samples, rng: np.random.Generator) -> Hypervector:
    """Sequence-encode sample vectors: rotate the accumulator, bundle, repeat.

    The accumulator starts empty, so a single-sample n-gram reduces to that
    sample. Order matters: swapping two distinct samples changes the counts.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("cannot encode an empty n-gram")
    bundle = Bundle(samples[0].dim)
    for s in samples:
        bundle.permute()
        bundle.bundle_in(s)
    return bundle.binarize(rng)


def encode_window(
    records, schema: EncoderSchema, rng: np.random.Generator
) -> Hypervector:
    """Encode a window of records as an n-gram of their sample vectors."""
    records = np.asarray(records, dtype=np.float64)
    if schema.ngram is not None and records.shape[0] != schema.ngram:
        raise ValueError(
            f"window has {records.shape[0]} records, schema expects {schema.ngram}"
        )
    samples = [encode_sample(r, schema, rng) for r in records]
    return encode_ngram(samples, rng)


def _level_indices(records: np.ndarray, schema: EncoderSchema) -> np.ndarray:
    cols = [quantize_many(records[:, j], schema.quants[j]) for j in range(schema.n_features)]
    return np.column_stack(cols)


def encode_records(records: np.ndarray, schema: EncoderSchema, seed: int) -> np.ndarray:
    """Encode every row of a record matrix; returns a packed (m, W) matrix.

    Bit-identical to calling :func:`encode_sample` on row i with the stream
    ``derive_rng(seed, "enc", i)``, but vectorized in chunks.
    """
    records = np.asarray(records, dtype=np.float64)
    if records.ndim != 2 or records.shape[1] != schema.n_features:
        raise ValueError(
            f"record matrix must be (m, {schema.n_features}), got {records.shape}"
        )
    if not np.isfinite(records).all():
        raise ValueError("record matrix contains non-finite values")
    m = records.shape[0]
    n = schema.n_features
    dim = schema.dim
    indices = _level_indices(records, schema)
    level_bits = [cim.bits() for cim in schema.cims]
    out = np.empty((m, n_words(dim)), dtype=np.uint64)
    for start in range(0, m, _CHUNK):
        stop = min(start + _CHUNK, m)
        counts = np.zeros((stop - start, dim), dtype=np.int32)
        for j in range(n):
            counts += level_bits[j][indices[start:stop, j]]
        doubled = counts * 2
        bits = (doubled > n).astype(np.uint8)
        if n % 2 == 0:
            tie_rows = np.flatnonzero((doubled == n).any(axis=1))
            for row in tie_rows:
                ties = np.flatnonzero(doubled[row] == n)
                rng = derive_rng(seed, "enc", start + row)
                bits[row, ties] = rng.integers(0, 2, size=ties.size, dtype=np.uint8)
        out[start:stop] = pack_bits(bits).reshape(stop - start, -1)
    return out


def encode_windows(
    records: np.ndarray,
    schema: EncoderSchema,
    seed: int,
    segments: list[tuple[int, int]] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sliding-window n-gram encoding with stride 1.

    Each record is encoded once (stream id = record index); the window ending
    at record t then bundles the n rotated sample vectors and binarizes with
    the stream ``derive_rng(seed, "ngram", t)``. ``segments`` restricts
    windows to contiguous [start, stop) runs (e.g. one per recording subject)
    so windows never span a boundary. Returns the packed window matrix and
    the index of each window's last record, whose label the window inherits.
    """
    if schema.ngram is None:
        raise ValueError("schema has no n-gram length; use encode_records")
    n = schema.ngram
    records = np.asarray(records, dtype=np.float64)
    sample_words = encode_records(records, schema, seed)
    if segments is None:
        segments = [(0, records.shape[0])]
    window_ends = [
        t for start, stop in segments for t in range(start + n - 1, stop)
    ]
    if not window_ends:
        raise ValueError(f"no window of length {n} fits in the given segments")
    dim = schema.dim
    out = np.empty((len(window_ends), n_words(dim)), dtype=np.uint64)
    for w, t in enumerate(window_ends):
        counts = np.zeros(dim, dtype=np.int64)
        for a in range(n):
            counts += np.roll(unpack_bits(sample_words[t - a], dim), a)
        bits = binarize_counts(counts, n, derive_rng(seed, "ngram", t))
        out[w] = pack_bits(bits)
    return out, np.asarray(window_ends, dtype=np.int64)


def stack_samples(samples) -> tuple[np.ndarray, int]:
    """Normalize a sample collection to (packed matrix, dim)."""
    if isinstance(samples, EncodedDataset):
        return samples.packed, samples.dim
    if isinstance(samples, np.ndarray) and samples.dtype == np.uint64:
        raise TypeError("a bare packed matrix has no dimension; pass an EncodedDataset")
    samples = list(samples)
    return stack_words(samples), samples[0].dim
