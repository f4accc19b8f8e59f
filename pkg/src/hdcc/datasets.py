"""Dataset loading, schema sidecars, synthetic fixtures, and k-fold splits.

The canonical interchange format is a numeric CSV (optionally with a single
header row, '.' decimal separator) plus a JSON sidecar schema declaring the
feature count, label column, value range, quantization step, and optional
n-gram length and group column. Raw upstream layouts are converted once via
the ``prepare`` CLI; the engine itself only consumes the canonical form.

Labels are remapped to dense 0-based ids at load time; the mapping back to
the raw values is kept on the dataset for human-readable reports. A group
column (e.g. a recording subject) gets the same treatment.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .memory import QuantizationSchema

__all__ = [
    "DatasetError",
    "DatasetSchema",
    "Dataset",
    "load_csv",
    "load_schema",
    "save_schema",
    "make_synthetic",
    "synthetic_schema",
    "kfold_indices",
    "kfold_split",
]


class DatasetError(ValueError):
    """Malformed dataset file or a record violating the schema."""


@dataclass(frozen=True)
class DatasetSchema:
    """Declares how to read and quantize one dataset's canonical CSV."""

    n_features: int
    label_column: int
    v_min: float
    v_max: float
    step: float
    ngram: int | None = None
    group_column: int | None = None

    def __post_init__(self):
        if self.n_features < 1:
            raise DatasetError("schema needs at least one feature")
        self.quantization()  # validates range and step

    def quantization(self) -> QuantizationSchema:
        return QuantizationSchema(self.v_min, self.v_max, self.step)

    @property
    def n_columns(self) -> int:
        return self.n_features + 1 + (0 if self.group_column is None else 1)

    def to_json(self) -> dict:
        data = {
            "n_features": self.n_features,
            "label_column": self.label_column,
            "v_min": self.v_min,
            "v_max": self.v_max,
            "step": self.step,
        }
        if self.ngram is not None:
            data["ngram"] = self.ngram
        if self.group_column is not None:
            data["group_column"] = self.group_column
        return data


def load_schema(path) -> DatasetSchema:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        return DatasetSchema(
            n_features=int(data["n_features"]),
            label_column=int(data["label_column"]),
            v_min=float(data["v_min"]),
            v_max=float(data["v_max"]),
            step=float(data["step"]),
            ngram=int(data["ngram"]) if data.get("ngram") is not None else None,
            group_column=(
                int(data["group_column"]) if data.get("group_column") is not None else None
            ),
        )
    except KeyError as exc:
        raise DatasetError(f"schema file {path} is missing field {exc}") from None


def save_schema(path, schema: DatasetSchema) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_json(), fh, indent=2)
        fh.write("\n")


def _dense_ids(raw: np.ndarray, names: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    if names is None:
        names = np.unique(raw)
    ids = np.searchsorted(names, raw)
    return ids.astype(np.int64), names


@dataclass
class Dataset:
    """Validated records with dense labels and an optional group id per row."""

    records: np.ndarray
    labels: np.ndarray
    label_names: np.ndarray
    groups: np.ndarray | None = None
    group_names: np.ndarray | None = None
    provenance: str = ""

    def __post_init__(self):
        if not self.provenance:
            self.provenance = self._hash()

    def _hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.records.tobytes())
        h.update(self.label_names[self.labels].tobytes())
        if self.groups is not None:
            h.update(self.group_names[self.groups].tobytes())
        return h.hexdigest()

    @property
    def m(self) -> int:
        return self.records.shape[0]

    @property
    def n_features(self) -> int:
        return self.records.shape[1]

    @property
    def K(self) -> int:
        return len(self.label_names)

    def __len__(self) -> int:
        return self.m

    def subset(self, indices) -> Dataset:
        indices = np.asarray(indices)
        return Dataset(
            records=self.records[indices],
            labels=self.labels[indices],
            label_names=self.label_names,
            groups=None if self.groups is None else self.groups[indices],
            group_names=self.group_names,
        )

    def group_segments(self) -> list[tuple[int, int]]:
        """Contiguous [start, stop) runs of equal group id, in file order."""
        if self.groups is None:
            return [(0, self.m)]
        boundaries = np.flatnonzero(np.diff(self.groups) != 0) + 1
        edges = [0, *boundaries.tolist(), self.m]
        return list(zip(edges[:-1], edges[1:]))

    def to_csv(self, path) -> None:
        """Canonical writer: features, then raw label, then raw group."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            raw_labels = self.label_names[self.labels]
            raw_groups = None if self.groups is None else self.group_names[self.groups]
            for i in range(self.m):
                row = [repr(float(x)) for x in self.records[i]]
                row.append(repr(float(raw_labels[i])))
                if raw_groups is not None:
                    row.append(repr(float(raw_groups[i])))
                writer.writerow(row)

    def canonical_schema(self, v_min: float, v_max: float, step: float,
                         ngram: int | None = None) -> DatasetSchema:
        """Schema matching :meth:`to_csv` column order."""
        return DatasetSchema(
            n_features=self.n_features,
            label_column=self.n_features,
            v_min=v_min,
            v_max=v_max,
            step=step,
            ngram=ngram,
            group_column=None if self.groups is None else self.n_features + 1,
        )


def _parse_rows(path, schema: DatasetSchema) -> np.ndarray:
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            values: list[float] = []
            bad = False
            for cell in row:
                try:
                    v = float(cell)
                except ValueError:
                    if line_no == 1:
                        bad = True  # header row
                        break
                    raise DatasetError(
                        f"{path}: row {line_no}: non-numeric value {cell.strip()!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetError(
                        f"{path}: row {line_no}: non-finite value {cell.strip()!r}"
                    )
                values.append(v)
            if bad:
                continue
            if len(values) != schema.n_columns:
                raise DatasetError(
                    f"{path}: row {line_no}: expected {schema.n_columns} columns, "
                    f"got {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def load_csv(path, schema: DatasetSchema, label_names: np.ndarray | None = None) -> Dataset:
    """Load and validate a canonical CSV against its schema.

    When ``label_names`` is given (e.g. the training set's mapping), any row
    whose label is not in that set is rejected.
    """
    if not os.path.exists(path):
        raise DatasetError(f"dataset file not found: {path}")
    table = _parse_rows(path, schema)
    special = {schema.label_column}
    if schema.group_column is not None:
        special.add(schema.group_column)
    if max(special) >= table.shape[1]:
        raise DatasetError(f"{path}: schema column index out of range")
    feature_cols = [c for c in range(table.shape[1]) if c not in special]
    records = np.ascontiguousarray(table[:, feature_cols])
    raw_labels = table[:, schema.label_column]
    if label_names is not None:
        unknown = np.setdiff1d(np.unique(raw_labels), label_names)
        if unknown.size:
            raise DatasetError(
                f"{path}: labels {unknown.tolist()} not in the declared class set"
            )
    labels, label_names = _dense_ids(raw_labels, label_names)
    groups = group_names = None
    if schema.group_column is not None:
        groups, group_names = _dense_ids(table[:, schema.group_column])
    return Dataset(records, labels, label_names, groups, group_names)


def synthetic_schema(n_features: int, L: int = 21) -> DatasetSchema:
    """Schema for synthetic fixtures: integer levels 0..L-1, step 1."""
    return DatasetSchema(
        n_features=n_features, label_column=n_features, v_min=0.0, v_max=float(L - 1), step=1.0
    )


def make_synthetic(
    K: int,
    n: int,
    m_per_class: int,
    separation: float,
    rng: np.random.Generator,
    L: int = 21,
) -> Dataset:
    """Level-space blobs: one random centroid per class plus bounded jitter.

    The jitter half-width shrinks as ``floor((L-1) / (1 + separation))``, so
    separation 0 smears classes over the whole range (chance-level problem)
    and large separation collapses each class onto its centroid.
    """
    if K < 2:
        raise ValueError(f"need at least 2 classes, got {K}")
    if separation < 0:
        raise ValueError("separation must be >= 0")
    centroids = rng.integers(0, L, size=(K, n))
    labels = np.repeat(np.arange(K, dtype=np.int64), m_per_class)
    radius = int((L - 1) // (1 + separation))
    jitter = rng.integers(-radius, radius + 1, size=(labels.size, n))
    records = np.clip(centroids[labels] + jitter, 0, L - 1).astype(np.float64)
    return Dataset(records, labels, label_names=np.arange(K, dtype=np.float64))


def kfold_indices(m: int, k: int, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint, exhaustive folds of near-equal size (differ by at most 1)."""
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if k > m:
        raise ValueError(f"cannot make {k} folds from {m} samples")
    perm = rng.permutation(m)
    folds = np.array_split(perm, k)
    pairs = []
    for i in range(k):
        val = np.sort(folds[i])
        train = np.sort(np.concatenate([folds[j] for j in range(k) if j != i]))
        pairs.append((train, val))
    return pairs


def kfold_split(dataset: Dataset, k: int, rng: np.random.Generator) -> list[tuple[Dataset, Dataset]]:
    """Materialized (train, validation) dataset pairs for k-fold CV."""
    return [
        (dataset.subset(train), dataset.subset(val))
        for train, val in kfold_indices(dataset.m, k, rng)
    ]
