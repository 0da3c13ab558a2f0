"""Run configuration and its flat ``key = value`` file format.

Schema (one key per line, ``#`` starts a comment, ``none`` means unset)::

    window_ms     int    analysis window, fixed at 25
    hop_ms        int    frame hop, fixed at 10
    sample_rate   int    analysis rate, fixed at 16000
    bins          int    histogram bins per feature for MI estimates
    folds         int    cross-validation folds
    selection_k   int    features kept by greedy MI selection (none = all)
    classifier    str    gmm | mlp | svm
    gaussians     int    GMM components per class
    neurons       int    MLP hidden units
    learning_rate float  MLP step size
    epochs        int    MLP epoch cap
    c             float  SVM box constraint
    gamma         float  SVM kernel width (none = 1 / n_features)
    seed          int    master seed
    w_tpr         float  RER weight on the miss rate
    w_fpr         float  RER weight on the false-alarm rate
    group_folds   bool   keep each recording inside one fold
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from coughdet.features.registry import N_FEATURES
from coughdet.frontend import FRAME_MS, HOP_MS, TARGET_RATE


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    window_ms: int = FRAME_MS
    hop_ms: int = HOP_MS
    sample_rate: int = TARGET_RATE
    bins: int = 50
    folds: int = 10
    selection_k: int | None = 20
    classifier: str = "gmm"
    gaussians: int = 16
    neurons: int = 64
    learning_rate: float = 0.01
    epochs: int = 500
    c: float = 10.0
    gamma: float | None = None
    seed: int = 0
    w_tpr: float = 1.0
    w_fpr: float = 1.0
    group_folds: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        fixed = {"window_ms": FRAME_MS, "hop_ms": HOP_MS, "sample_rate": TARGET_RATE}
        for key, value in fixed.items():
            if getattr(self, key) != value:
                raise ConfigError(f"{key} is fixed at {value} by the analysis front end, got {getattr(self, key)}")
        for key in ("folds", "gaussians", "neurons", "learning_rate", "epochs", "c", "w_tpr", "w_fpr"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        if self.bins < 2:
            raise ConfigError(f"bins must be at least 2, got {self.bins}")
        if self.folds < 2:
            raise ConfigError(f"folds must be at least 2, got {self.folds}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.selection_k is not None and not 1 <= self.selection_k <= N_FEATURES:
            raise ConfigError(f"selection_k must be in [1, {N_FEATURES}], got {self.selection_k}")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.classifier not in ("gmm", "mlp", "svm"):
            raise ConfigError(f"classifier must be gmm, mlp or svm, got {self.classifier!r}")

    def replace(self, **changes) -> "RunConfig":
        """Copy with the non-None entries of ``changes`` applied."""
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def hyperparameters(self) -> dict:
        """Keyword arguments for :func:`coughdet.classifiers.train`."""
        if self.classifier == "gmm":
            return {"gaussians": self.gaussians}
        if self.classifier == "mlp":
            return {"neurons": self.neurons, "learning_rate": self.learning_rate, "epochs": self.epochs}
        return {"c": self.c, "gamma": self.gamma}

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return "".join(f"{key} = {_format(value)}\n" for key, value in self.to_dict().items())


_TYPES = {
    "window_ms": int, "hop_ms": int, "sample_rate": int, "bins": int, "folds": int,
    "selection_k": int, "classifier": str, "gaussians": int, "neurons": int,
    "learning_rate": float, "epochs": int, "c": float, "gamma": float, "seed": int,
    "w_tpr": float, "w_fpr": float, "group_folds": bool,
}
_OPTIONAL = {"selection_k", "gamma"}


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _parse_value(key: str, raw: str):
    kind = _TYPES[key]
    if raw.lower() == "none":
        if key in _OPTIONAL:
            return None
        raise ConfigError(f"{key} cannot be none")
    if kind is bool:
        if raw.lower() not in ("true", "false"):
            raise ConfigError(f"{key} must be true or false, got {raw!r}")
        return raw.lower() == "true"
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind.__name__}") from None


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return dataclasses.replace(base or RunConfig(), **values)


def read_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def write_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(config.to_text(), encoding="utf-8")
