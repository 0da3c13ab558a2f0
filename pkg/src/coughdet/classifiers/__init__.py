"""Frame classifiers sharing one scoring contract: higher score = more cough-like."""

from coughdet.classifiers.base import (
    ModelError,
    Standardizer,
    TrainedModel,
    from_json,
    load_model,
    save_model,
    to_json,
)
from coughdet.classifiers.gmm import DiagonalGmm, fit_diag_gmm, kmeans, score_gmm, train_gmm
from coughdet.classifiers.mlp import fit_mlp, score_mlp, train_mlp
from coughdet.classifiers.svm import score_svm, smo, train_svm

SCORERS = {"gmm": score_gmm, "mlp": score_mlp, "svm": score_svm}
CLASSIFIERS = tuple(SCORERS)


def train(kind: str, matrix, seed: int = 0, **hyper) -> TrainedModel:
    """Dispatch to a trainer by name with its hyperparameters.

    gmm: ``gaussians``; mlp: ``neurons``, ``learning_rate``, ``epochs``;
    svm: ``c``, ``gamma``.
    """
    if kind == "gmm":
        return train_gmm(matrix, int(hyper.get("gaussians", 16)), seed)
    if kind == "mlp":
        options = {}
        if hyper.get("learning_rate") is not None:
            options["learning_rate"] = float(hyper["learning_rate"])
        if hyper.get("epochs") is not None:
            options["max_epochs"] = int(hyper["epochs"])
        return train_mlp(matrix, int(hyper.get("neurons", 64)), seed, **options)
    if kind == "svm":
        return train_svm(matrix, float(hyper.get("c", 10.0)), hyper.get("gamma"), seed)
    raise ModelError(f"unknown classifier {kind!r} (choose from {', '.join(CLASSIFIERS)})")


__all__ = [
    "CLASSIFIERS", "SCORERS", "ModelError", "Standardizer", "TrainedModel", "DiagonalGmm",
    "fit_diag_gmm", "fit_mlp", "from_json", "kmeans", "load_model", "save_model", "score_gmm",
    "score_mlp", "score_svm", "smo", "to_json", "train", "train_gmm", "train_mlp", "train_svm",
]
