"""Histogram (plug-in) estimators of entropy, mutual information and three-way
interaction, the relative MI report, and greedy MI-based feature selection.

All quantities are in bits. Interaction follows the sign convention where a
positive value means two features share class information (redundancy) and a
negative value means they are more informative together (synergy).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from coughdet.features.matrix import FeatureMatrix

DEFAULT_BINS = 50


@dataclass(frozen=True)
class QuantizedColumn:
    bin_indices: np.ndarray
    n_bins: int
    edges: np.ndarray

    def __len__(self) -> int:
        return len(self.bin_indices)


def quantize(column, n_bins: int = DEFAULT_BINS) -> QuantizedColumn:
    """Equal-width binning over [min, max]; the maximum lands in the last bin.

    A constant column maps entirely to bin 0.
    """
    x = np.asarray(column, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot quantize an empty column")
    if n_bins < 2:
        raise ValueError(f"need at least 2 bins, got {n_bins}")
    if not np.all(np.isfinite(x)):
        raise ValueError("column contains NaN or Inf")
    lo, hi = float(x.min()), float(x.max())
    if hi > lo:
        edges = np.linspace(lo, hi, n_bins + 1)
        idx = np.floor((x - lo) / (hi - lo) * n_bins).astype(np.int64)
        idx = np.clip(idx, 0, n_bins - 1)
    else:
        edges = lo + np.arange(n_bins + 1, dtype=float)
        idx = np.zeros(x.size, dtype=np.int64)
    return QuantizedColumn(idx, n_bins, edges)


def _codes(v) -> tuple[np.ndarray, int]:
    """Integer codes and alphabet size for a quantized column or a discrete sequence."""
    if isinstance(v, QuantizedColumn):
        return v.bin_indices, v.n_bins
    arr = np.asarray(v).ravel()
    _, codes = np.unique(arr, return_inverse=True)
    return codes.astype(np.int64), int(codes.max()) + 1 if codes.size else 0


def _check_lengths(*arrays):
    lengths = {len(a) for a in arrays}
    if len(lengths) != 1:
        raise ValueError(f"length mismatch: {sorted(len(a) for a in arrays)}")


def _plogp_sum(counts: np.ndarray, total: int) -> float:
    """-sum p log2 p over non-zero counts."""
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def entropy(labels) -> float:
    """Plug-in Shannon entropy in bits."""
    codes, k = _codes(labels)
    if codes.size == 0:
        raise ValueError("entropy of an empty sequence")
    return _plogp_sum(np.bincount(codes, minlength=k), codes.size)


def _joint_counts(*cols) -> tuple[np.ndarray, tuple[int, ...]]:
    coded = [_codes(c) for c in cols]
    _check_lengths(*(c for c, _ in coded))
    shape = tuple(max(k, 1) for _, k in coded)
    flat = np.ravel_multi_index(tuple(c for c, _ in coded), shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    return counts, shape


def mutual_information(x, labels) -> float:
    """I(X;C) from the joint histogram, in bits."""
    counts, _ = _joint_counts(x, labels)
    n = counts.sum()
    pxc = counts / n
    px = pxc.sum(axis=1, keepdims=True)
    pc = pxc.sum(axis=0, keepdims=True)
    nz = pxc > 0
    return float((pxc[nz] * np.log2(pxc[nz] / (px @ pc)[nz])).sum())


def interaction(x, y, labels) -> float:
    """Three-way interaction I(X;Y;C) evaluated term by term from the triple histogram."""
    counts, _ = _joint_counts(x, y, labels)
    p = counts / counts.sum()
    pxy = p.sum(axis=2, keepdims=True)
    pxc = p.sum(axis=1, keepdims=True)
    pyc = p.sum(axis=0, keepdims=True)
    px = p.sum(axis=(1, 2), keepdims=True)
    py = p.sum(axis=(0, 2), keepdims=True)
    pc = p.sum(axis=(0, 1), keepdims=True)
    nz = p > 0
    num = (pxy * pxc * pyc)
    den = p * px * py * pc
    ratio = num[nz] / den[nz]
    return float((p[nz] * np.log2(ratio)).sum())


def joint_mi(x, y, labels) -> float:
    """I(X,Y;C) computed directly, treating the pair (X, Y) as one variable."""
    cx, kx = _codes(x)
    cy, ky = _codes(y)
    _check_lengths(cx, cy)
    pair = cx * max(ky, 1) + cy
    return mutual_information(pair, labels)


def joint_mi_decomposed(x, y, labels) -> float:
    """I(X,Y;C) as I(X;C) + I(Y;C) - I(X;Y;C)."""
    return mutual_information(x, labels) + mutual_information(y, labels) - interaction(x, y, labels)


@dataclass
class MiReport:
    """Relative measures, in percent of H(C).

    ``redundancy[i, j]`` is I(Xi;Xj;C)/H(C) and ``joint[i, j]`` is
    I(Xi,Xj;C)/H(C); both diagonals equal ``intrinsic``.
    """

    names: tuple[str, ...]
    intrinsic: np.ndarray
    redundancy: np.ndarray
    joint: np.ndarray
    class_entropy: float

    def table(self) -> np.ndarray:
        """Triangular layout: diagonal intrinsic, lower redundancy, upper joint."""
        out = np.tril(self.redundancy, -1) + np.triu(self.joint, 1)
        np.fill_diagonal(out, self.intrinsic)
        return out

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "class_entropy_bits": self.class_entropy,
            "intrinsic_percent": self.intrinsic.tolist(),
            "redundancy_percent": self.redundancy.tolist(),
            "joint_percent": self.joint.tolist(),
        }

    def write_csv(self, path: str | Path) -> None:
        table = self.table()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["", *self.names])
            for name, row in zip(self.names, table):
                writer.writerow([name, *(f"{v:.1f}" for v in row)])

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


def quantize_matrix(matrix: FeatureMatrix, n_bins: int = DEFAULT_BINS, names=None) -> dict[str, QuantizedColumn]:
    names = matrix.names if names is None else tuple(names)
    idx = matrix.column_index(names)
    return {n: quantize(matrix.values[:, i], n_bins) for n, i in zip(names, idx)}


def build_report(matrix: FeatureMatrix, subset=None, n_bins: int = DEFAULT_BINS) -> MiReport:
    """Pairwise relative information measures for ``subset`` (default: all columns)."""
    subset = matrix.names if subset is None else tuple(subset)
    columns = quantize_matrix(matrix, n_bins, subset)
    labels = matrix.labels
    h = entropy(labels)
    scale = 100.0 / h if h > 0 else 0.0
    k = len(subset)
    mi = np.array([mutual_information(columns[n], labels) for n in subset])
    red = np.zeros((k, k))
    for i in range(k):
        red[i, i] = mi[i]
        for j in range(i + 1, k):
            red[i, j] = red[j, i] = interaction(columns[subset[i]], columns[subset[j]], labels)
    joint = mi[:, None] + mi[None, :] - red
    return MiReport(tuple(subset), mi * scale, red * scale, joint * scale, h)


@dataclass
class SelectionResult:
    order: tuple[str, ...]
    scores: tuple[float, ...]
    report: MiReport | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"order": list(self.order), "scores_bits": list(self.scores)}


def select_features(matrix: FeatureMatrix, k: int, n_bins: int = DEFAULT_BINS,
                    with_report: bool = True) -> SelectionResult:
    """Greedy forward selection maximising I(X;C) - max over selected Y of I(X;Y;C).

    Ties go to the lowest column index.
    """
    n = matrix.n_features
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    columns = quantize_matrix(matrix, n_bins)
    cols = [columns[name] for name in matrix.names]
    labels = matrix.labels
    relevance = np.array([mutual_information(c, labels) for c in cols])
    worst_redundancy = np.full(n, -np.inf)
    chosen: list[int] = []
    scores: list[float] = []
    available = np.ones(n, dtype=bool)
    for step in range(k):
        objective = relevance - (worst_redundancy if chosen else 0.0)
        objective = np.where(available, objective, -np.inf)
        best = int(np.argmax(objective))
        chosen.append(best)
        scores.append(float(objective[best]))
        available[best] = False
        if step + 1 < k:
            for i in np.flatnonzero(available):
                worst_redundancy[i] = max(worst_redundancy[i], interaction(cols[i], cols[best], labels))
    order = tuple(matrix.names[i] for i in chosen)
    report = build_report(matrix, order, n_bins) if with_report else None
    return SelectionResult(order, tuple(scores), report)
