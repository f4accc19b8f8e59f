"""Binary file formats for memories, models, and encoded-dataset caches.

All integers are little-endian. Vector payloads are the packed 64-bit words
of each hypervector, little-endian, in logical order (see ``hdvec``). Every
format round-trips bit-exactly.

Level-memory container (one file holds every per-feature level memory)::

    magic   4s   b"HDCM"
    version u16  1
    kind    u16  0 = item memory, 1 = level memory
    dim     u32  logical bits per vector
    count   u32  number of memories (features) for kind 1, symbols for kind 0
    L       u32  levels per memory (1 for kind 0)
    words   count * L * W u64

Model file::

    magic   4s   b"HDAM"
    version u16  1
    flags   u16  bit 0: bundles included (warm-resume state)
    dim     u32
    K       u32
    n       K i64        per-class net counts
    protos  K * W u64    per-class prototype bits
    counts  K * dim i64  only when flags bit 0 is set

Encoded-dataset cache::

    magic   4s   b"HDEN"
    version u16  1
    pad     u16  0
    dim     u32
    m       u64  sample count
    seed    u64  encoding seed
    words   m * W u64
    labels  m i64

Files are written atomically (temp file + rename in the target directory).
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .encoder import EncodedDataset
from .hdvec import n_words
from .memory import ItemMemory, LevelMemory
from .model import AssociativeMemory

__all__ = [
    "atomic_write_bytes",
    "atomic_write_text",
    "save_level_memories",
    "load_level_memories",
    "save_item_memory",
    "load_item_memory",
    "save_model",
    "load_model",
    "save_encoded",
    "load_encoded",
]

_MEM_MAGIC = b"HDCM"
_MODEL_MAGIC = b"HDAM"
_CACHE_MAGIC = b"HDEN"
_VERSION = 1


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _words_bytes(packed: np.ndarray) -> bytes:
    return packed.astype("<u8").tobytes()


def _read_words(buf: memoryview, offset: int, count: int) -> tuple[np.ndarray, int]:
    nbytes = count * 8
    words = np.frombuffer(buf[offset : offset + nbytes], dtype="<u8").astype(np.uint64)
    return words, offset + nbytes


def save_level_memories(path, memories: list[LevelMemory]) -> None:
    if not memories:
        raise ValueError("nothing to save")
    dim = memories[0].dim
    L = memories[0].L
    if any(m.dim != dim or m.L != L for m in memories):
        raise ValueError("level memories disagree on dim or L")
    header = struct.pack("<4sHHIII", _MEM_MAGIC, _VERSION, 1, dim, len(memories), L)
    body = b"".join(_words_bytes(m.packed) for m in memories)
    atomic_write_bytes(path, header + body)


def load_level_memories(path) -> list[LevelMemory]:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, version, kind, dim, count, L = struct.unpack_from("<4sHHIII", data, 0)
    if magic != _MEM_MAGIC or version != _VERSION or kind != 1:
        raise ValueError(f"{path}: not a level-memory file")
    buf = memoryview(data)
    offset = struct.calcsize("<4sHHIII")
    flips = dim // (2 * (L - 1))
    memories = []
    for _ in range(count):
        words, offset = _read_words(buf, offset, L * n_words(dim))
        memories.append(LevelMemory(dim, L, flips, words.reshape(L, n_words(dim))))
    return memories


def save_item_memory(path, memory: ItemMemory) -> None:
    header = struct.pack("<4sHHIII", _MEM_MAGIC, _VERSION, 0, memory.dim, len(memory), 1)
    atomic_write_bytes(path, header + _words_bytes(memory.packed))


def load_item_memory(path) -> ItemMemory:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, version, kind, dim, count, L = struct.unpack_from("<4sHHIII", data, 0)
    if magic != _MEM_MAGIC or version != _VERSION or kind != 0 or L != 1:
        raise ValueError(f"{path}: not an item-memory file")
    offset = struct.calcsize("<4sHHIII")
    words, _ = _read_words(memoryview(data), offset, count * n_words(dim))
    return ItemMemory(dim, words.reshape(count, n_words(dim)))


def save_model(path, am: AssociativeMemory, include_bundles: bool = False) -> None:
    if include_bundles and am.counts is None:
        raise ValueError("snapshot carries no bundles to save")
    flags = 1 if include_bundles else 0
    parts = [
        struct.pack("<4sHHII", _MODEL_MAGIC, _VERSION, flags, am.dim, am.K),
        am.n.astype("<i8").tobytes(),
        _words_bytes(am.prototypes),
    ]
    if include_bundles:
        parts.append(am.counts.astype("<i8").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def load_model(path) -> AssociativeMemory:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, version, flags, dim, K = struct.unpack_from("<4sHHII", data, 0)
    if magic != _MODEL_MAGIC or version != _VERSION:
        raise ValueError(f"{path}: not a model file")
    buf = memoryview(data)
    offset = struct.calcsize("<4sHHII")
    n = np.frombuffer(buf[offset : offset + K * 8], dtype="<i8").astype(np.int64)
    offset += K * 8
    words, offset = _read_words(buf, offset, K * n_words(dim))
    counts = None
    if flags & 1:
        counts = (
            np.frombuffer(buf[offset : offset + K * dim * 8], dtype="<i8")
            .astype(np.int64)
            .reshape(K, dim)
        )
    return AssociativeMemory(dim, K, counts, n, words.reshape(K, n_words(dim)))


def save_encoded(path, encoded: EncodedDataset) -> None:
    header = struct.pack(
        "<4sHHIQQ", _CACHE_MAGIC, _VERSION, 0, encoded.dim, len(encoded), encoded.seed
    )
    body = _words_bytes(encoded.packed) + encoded.labels.astype("<i8").tobytes()
    atomic_write_bytes(path, header + body)


def load_encoded(path) -> EncodedDataset:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, version, _, dim, m, seed = struct.unpack_from("<4sHHIQQ", data, 0)
    if magic != _CACHE_MAGIC or version != _VERSION:
        raise ValueError(f"{path}: not an encoded-dataset cache file")
    buf = memoryview(data)
    offset = struct.calcsize("<4sHHIQQ")
    words, offset = _read_words(buf, offset, m * n_words(dim))
    labels = np.frombuffer(buf[offset : offset + m * 8], dtype="<i8").astype(np.int64)
    return EncodedDataset(dim, words.reshape(m, n_words(dim)), labels, int(seed))
