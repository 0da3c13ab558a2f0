"""Cross-validation folds, ROC sweeps, AUC and the revised error rate (RER).

RER is the smallest (optionally weighted) Euclidean distance between an ROC
operating point and the ideal corner TPR = 1, FPR = 0.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from coughdet import classifiers
from coughdet.features.matrix import FeatureMatrix
from coughdet.infotheory import DEFAULT_BINS, select_features

log = logging.getLogger(__name__)


class EvaluationError(ValueError):
    pass


class NonFiniteScoresError(EvaluationError, ArithmeticError):
    """A classifier produced NaN or Inf scores."""


@dataclass(frozen=True)
class FoldPlan:
    assignments: np.ndarray
    n_folds: int
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def make_folds(n: int, k: int = 10, seed: int = 0, groups=None) -> FoldPlan:
    """Random permutation split into k contiguous blocks (sizes differ by at most one).

    With ``groups`` (one id per frame), whole groups are dealt to folds
    instead, so no group is split across train and test.
    """
    if k < 2:
        raise EvaluationError(f"need at least 2 folds, got {k}")
    rng = np.random.default_rng(seed)
    if groups is None:
        if n < k:
            raise EvaluationError(f"{n} frames cannot be split into {k} folds")
        perm = rng.permutation(n)
        assignments = np.empty(n, dtype=np.int64)
        for fold, block in enumerate(np.array_split(perm, k)):
            assignments[block] = fold
        return FoldPlan(assignments, k, seed)
    groups = np.asarray(groups)
    ids = np.unique(groups)
    if len(ids) < k:
        raise EvaluationError(f"{len(ids)} groups cannot be split into {k} folds")
    order = rng.permutation(ids)
    fold_of = {g: i % k for i, g in enumerate(order)}
    return FoldPlan(np.array([fold_of[g] for g in groups], dtype=np.int64), k, seed)


@dataclass
class RocCurve:
    """Operating points sorted by descending threshold.

    The first point is the +inf anchor (nothing predicted positive, so
    FPR = TPR = 0) and the last point has FPR = TPR = 1.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    rer: float = float("nan")
    rer_threshold: float = float("nan")
    weights: tuple[float, float] = (1.0, 1.0)

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))

    def auc(self) -> float:
        return float(np.trapezoid(self.tpr, self.fpr))

    def operating_point(self) -> tuple[float, float]:
        """(TPR, FPR) at the RER-minimising threshold."""
        i = int(np.flatnonzero(self.thresholds == self.rer_threshold)[0])
        return float(self.tpr[i]), float(self.fpr[i])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["threshold", "fpr", "tpr"])
            for t, f, p in self.points:
                writer.writerow([repr(t), repr(f), repr(p)])


def sweep_roc(scores, labels) -> RocCurve:
    """Predict positive iff score >= threshold, for every distinct score."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if len(scores) != len(labels):
        raise EvaluationError(f"{len(scores)} scores for {len(labels)} labels")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC needs both classes in the labels")
    if not np.all(np.isfinite(scores)):
        raise NonFiniteScoresError("scores contain NaN or Inf")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    # keep the last index of each run of equal scores: ties flip together
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    thresholds = np.r_[np.inf, s[last]]
    tpr = np.r_[0.0, tp[last] / n_pos]
    fpr = np.r_[0.0, fp[last] / n_neg]
    curve = RocCurve(thresholds, fpr, tpr)
    compute_rer(curve)
    return curve


def rer_distance(tpr, fpr, w_tpr: float = 1.0, w_fpr: float = 1.0):
    return np.sqrt(w_tpr * (1.0 - np.asarray(tpr)) ** 2 + w_fpr * np.asarray(fpr) ** 2)


def compute_rer(curve: RocCurve, w_tpr: float = 1.0, w_fpr: float = 1.0) -> tuple[float, float]:
    """Minimum distance to the ideal corner and the threshold reaching it.

    On ties the smallest threshold wins. The curve's ``rer`` fields are updated.
    """
    if w_tpr <= 0 or w_fpr <= 0:
        raise EvaluationError("RER weights must be positive")
    dist = rer_distance(curve.tpr, curve.fpr, w_tpr, w_fpr)
    best = dist.min()
    i = int(np.flatnonzero(dist == best)[-1])
    curve.rer, curve.rer_threshold, curve.weights = float(best), float(curve.thresholds[i]), (w_tpr, w_fpr)
    return curve.rer, curve.rer_threshold


@dataclass
class CrossValidationResult:
    curve: RocCurve
    scores: np.ndarray
    labels: np.ndarray
    plan: FoldPlan
    per_fold: list[dict] = field(default_factory=list)

    def metrics(self) -> dict:
        tpr, fpr = self.curve.operating_point()
        return {
            "tpr": tpr,
            "fpr": fpr,
            "rer": self.curve.rer,
            "rer_threshold": self.curve.rer_threshold,
            "auc": self.curve.auc(),
            "weights": {"w_tpr": self.curve.weights[0], "w_fpr": self.curve.weights[1]},
            "per_fold": self.per_fold,
        }


def cross_validate(matrix: FeatureMatrix, classifier: str = "gmm", selection_k: int | None = None,
                   seed: int = 0, n_folds: int = 10, n_bins: int = DEFAULT_BINS,
                   w_tpr: float = 1.0, w_fpr: float = 1.0, group_folds: bool = False,
                   **hyper) -> CrossValidationResult:
    """Pooled-score k-fold evaluation.

    Per fold, feature selection and standardisation see only the training
    part; the model scores the held-out part. One ROC is drawn over the
    pooled held-out scores.
    """
    plan = make_folds(len(matrix), n_folds, seed, matrix.groups if group_folds else None)
    k = matrix.n_features if selection_k is None else int(selection_k)
    scores = np.empty(len(matrix))
    per_fold = []
    for fold in range(n_folds):
        train_idx, test_idx = plan.train_indices(fold), plan.test_indices(fold)
        train, test = matrix.take(train_idx), matrix.take(test_idx)
        for part, name in ((train, "training"), (test, "test")):
            present = np.unique(part.labels)
            if len(present) < 2:
                raise EvaluationError(f"fold {fold}: {name} part has only class {present.tolist()}")
        if k < matrix.n_features:
            chosen = select_features(train, k, n_bins, with_report=False).order
        else:
            chosen = matrix.names
        model = classifiers.train(classifier, train.select(chosen), seed=seed + fold, **hyper)
        fold_scores = model.score_matrix(test.select(chosen))
        scores[test_idx] = fold_scores
        fold_curve = sweep_roc(fold_scores, test.labels)
        compute_rer(fold_curve, w_tpr, w_fpr)
        tpr, fpr = fold_curve.operating_point()
        per_fold.append({"fold": fold, "n_test": int(len(test_idx)), "features": list(chosen),
                         "tpr": tpr, "fpr": fpr, "rer": fold_curve.rer, "auc": fold_curve.auc()})
        log.info("fold %d: rer=%.4f", fold, fold_curve.rer)
    curve = sweep_roc(scores, matrix.labels)
    compute_rer(curve, w_tpr, w_fpr)
    return CrossValidationResult(curve, scores, matrix.labels.copy(), plan, per_fold)
