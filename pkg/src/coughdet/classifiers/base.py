"""Shared plumbing: standardisation, the trained-model wrapper, and model files.

Model files are JSON envelopes::

    {"type": "gmm" | "mlp" | "svm", "version": 1, "feature_names": [...],
     "standardization": {"mean": <array>, "std": <array>}, "payload": {...}}

where every array is ``{"shape": [...], "data": "<base64 little-endian f64>"}``.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from coughdet.features.matrix import FeatureMatrix

MODEL_FORMAT_VERSION = 1
STD_FLOOR = 1e-8


class ModelError(ValueError):
    """Invalid training input, scoring input, or model file."""


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=float)
        return cls(x.mean(axis=0), np.maximum(x.std(axis=0), STD_FLOOR))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std


@dataclass
class TrainedModel:
    """A fitted classifier plus the feature names and scaling it was trained with.

    ``params`` holds the classifier-specific arrays and scalars; the matching
    module (gmm, mlp or svm) knows how to score with them.
    """

    kind: str
    feature_names: tuple[str, ...]
    scaler: Standardizer
    params: dict[str, Any]

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)

    def prepare(self, rows, names=None) -> np.ndarray:
        """Validate the input columns and return standardised rows as a 2-D array."""
        if names is not None and tuple(names) != self.feature_names:
            raise ModelError(
                f"feature names do not match the model ({len(tuple(names))} given, "
                f"{len(self.feature_names)} expected, or different order)"
            )
        x = np.atleast_2d(np.asarray(rows, dtype=float))
        if x.shape[1] != len(self.feature_names):
            raise ModelError(f"expected {len(self.feature_names)} features, got {x.shape[1]}")
        return self.scaler.transform(x)

    def score(self, rows, names=None) -> np.ndarray:
        """Continuous score per row; larger means more cough-like."""
        from coughdet.classifiers import SCORERS

        return SCORERS[self.kind](self, rows, names)

    def score_matrix(self, matrix: FeatureMatrix) -> np.ndarray:
        return self.score(matrix.values, matrix.names)


def check_binary(matrix: FeatureMatrix) -> None:
    classes = set(np.unique(matrix.labels).tolist())
    if not classes <= {0, 1}:
        raise ModelError(f"labels must be 0/1, found {sorted(classes)}")
    if len(classes) < 2:
        raise ModelError("training data contains a single class")


def _encode(value):
    if isinstance(value, np.ndarray):
        arr = np.ascontiguousarray(value, dtype="<f8")
        return {"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _decode(value):
    if isinstance(value, dict) and set(value) == {"shape", "data"}:
        raw = base64.b64decode(value["data"])
        return np.frombuffer(raw, dtype="<f8").reshape(value["shape"]).astype(np.float64)
    return value


def to_json(model: TrainedModel) -> str:
    doc = {
        "type": model.kind,
        "version": MODEL_FORMAT_VERSION,
        "feature_names": list(model.feature_names),
        "standardization": {"mean": _encode(model.scaler.mean), "std": _encode(model.scaler.std)},
        "payload": {k: _encode(v) for k, v in model.params.items()},
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def from_json(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
        kind = doc["type"]
        if doc["version"] != MODEL_FORMAT_VERSION:
            raise ModelError(f"unsupported model version {doc['version']}")
        scaler = Standardizer(_decode(doc["standardization"]["mean"]), _decode(doc["standardization"]["std"]))
        params = {k: _decode(v) for k, v in doc["payload"].items()}
        names = doc["feature_names"]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ModelError(f"malformed model file: {exc}") from exc
    if kind not in ("gmm", "mlp", "svm"):
        raise ModelError(f"unknown model type {kind!r}")
    return TrainedModel(kind, tuple(names), scaler, params)


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(to_json(model) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return from_json(Path(path).read_text(encoding="utf-8"))
