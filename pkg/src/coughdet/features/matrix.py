"""Labelled per-frame feature table and its CSV / FMX1 file formats.

FMX1 layout (all little-endian)::

    b"FMX1" | u32 rows | u32 cols | cols x (u16 byte length, UTF-8 name)
           | rows*cols f64, row-major | rows u8 labels
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"FMX1"


class FeatureFormatError(ValueError):
    pass


@dataclass
class FeatureMatrix:
    values: np.ndarray
    labels: np.ndarray
    names: tuple[str, ...]
    # Recording index per row; only used for grouped cross-validation.
    groups: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            self.values = self.values.reshape(len(self.values), -1)
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        self.names = tuple(self.names)
        if len(self.labels) != len(self.values):
            raise FeatureFormatError(f"{len(self.labels)} labels for {len(self.values)} rows")
        if self.values.shape[1] != len(self.names):
            raise FeatureFormatError(f"{len(self.names)} names for {self.values.shape[1]} columns")
        if len(set(self.names)) != len(self.names):
            raise FeatureFormatError("feature names must be unique")
        if self.groups is not None:
            self.groups = np.asarray(self.groups, dtype=np.int64)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def column_index(self, names) -> list[int]:
        lookup = {n: i for i, n in enumerate(self.names)}
        missing = [n for n in names if n not in lookup]
        if missing:
            raise KeyError(f"unknown feature(s): {', '.join(missing)}")
        return [lookup[n] for n in names]

    def select(self, names) -> "FeatureMatrix":
        idx = self.column_index(names)
        return FeatureMatrix(self.values[:, idx], self.labels, tuple(names), self.groups)

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows)
        groups = None if self.groups is None else self.groups[rows]
        return FeatureMatrix(self.values[rows], self.labels[rows], self.names, groups)

    def with_labels(self, labels) -> "FeatureMatrix":
        return FeatureMatrix(self.values, labels, self.names, self.groups)


def concat(matrices) -> FeatureMatrix:
    """Stack matrices row-wise, tagging each row with its source index as group."""
    matrices = list(matrices)
    if not matrices:
        raise FeatureFormatError("nothing to concatenate")
    names = matrices[0].names
    for m in matrices[1:]:
        if m.names != names:
            raise FeatureFormatError("feature matrices have different columns")
    groups = np.concatenate([np.full(len(m), i) for i, m in enumerate(matrices)])
    return FeatureMatrix(
        np.vstack([m.values for m in matrices]),
        np.concatenate([m.labels for m in matrices]),
        names,
        groups,
    )


def write_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*matrix.names, "label"])
        for row, label in zip(matrix.values, matrix.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def read_csv(path: str | Path) -> FeatureMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FeatureFormatError(f"{path}: empty file") from None
        if not header or header[-1] != "label":
            raise FeatureFormatError(f"{path}: last column must be 'label'")
        rows = [r for r in reader if r]
    width = len(header)
    if any(len(r) != width for r in rows):
        raise FeatureFormatError(f"{path}: ragged rows")
    data = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    return FeatureMatrix(data[:, :-1], data[:, -1].astype(np.uint8), tuple(header[:-1]))


def to_fmx_bytes(matrix: FeatureMatrix) -> bytes:
    buf = io.BytesIO()
    rows, cols = matrix.values.shape
    buf.write(MAGIC)
    buf.write(struct.pack("<II", rows, cols))
    for name in matrix.names:
        raw = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
    buf.write(np.ascontiguousarray(matrix.values, dtype="<f8").tobytes())
    buf.write(matrix.labels.astype(np.uint8).tobytes())
    return buf.getvalue()


def from_fmx_bytes(data: bytes) -> FeatureMatrix:
    if data[:4] != MAGIC:
        raise FeatureFormatError("not an FMX1 file (bad magic)")
    try:
        rows, cols = struct.unpack_from("<II", data, 4)
        pos = 12
        names = []
        for _ in range(cols):
            (length,) = struct.unpack_from("<H", data, pos)
            pos += 2
            names.append(data[pos:pos + length].decode("utf-8"))
            pos += length
    except struct.error as exc:
        raise FeatureFormatError(f"truncated FMX1 header: {exc}") from exc
    n_values = rows * cols
    expected = pos + 8 * n_values + rows
    if len(data) != expected:
        raise FeatureFormatError(f"FMX1 size mismatch: {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8", count=n_values, offset=pos).reshape(rows, cols)
    labels = np.frombuffer(data, dtype=np.uint8, count=rows, offset=pos + 8 * n_values)
    return FeatureMatrix(values.astype(np.float64), labels.copy(), tuple(names))


def write_fmx(matrix: FeatureMatrix, path: str | Path) -> None:
    Path(path).write_bytes(to_fmx_bytes(matrix))


def read_fmx(path: str | Path) -> FeatureMatrix:
    return from_fmx_bytes(Path(path).read_bytes())


def read_matrix(path: str | Path) -> FeatureMatrix:
    """Read either format, chosen by extension (``.csv`` or anything else as FMX1)."""
    path = Path(path)
    return read_csv(path) if path.suffix.lower() == ".csv" else read_fmx(path)
