"""ROC and score-distribution figures.

Output is byte-stable for identical inputs: the SVG hash salt is fixed and
date metadata is dropped, so figures can sit under the run manifest's hashes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from coughdet.evaluation import RocCurve  # noqa: E402

_STABLE = {"svg.hashsalt": "coughdet", "svg.fonttype": "path", "path.simplify": False}


def _save(fig, path: str | Path) -> None:
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    metadata = {"Date": None} if fmt in ("svg", "pdf") else {"Software": None}
    with matplotlib.rc_context(_STABLE):
        fig.savefig(path, format=fmt, metadata=metadata)
    plt.close(fig)


def plot_roc(curve: RocCurve, path: str | Path, title: str = "ROC") -> None:
    """Staircase ROC with the RER operating point and its distance to the ideal corner."""
    with matplotlib.rc_context(_STABLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        ax.plot(curve.fpr, curve.tpr, drawstyle="steps-post", color="C0", lw=1.5,
                label=f"AUC = {curve.auc():.3f}")
        ax.plot([0, 1], [0, 1], ls=":", color="0.6", lw=1)
        tpr, fpr = curve.operating_point()
        ax.plot([0, fpr], [1, tpr], color="C3", lw=1)
        ax.plot(fpr, tpr, "o", color="C3", label=f"RER = {curve.rer:.4f}")
        ax.set_xlim(-0.01, 1.01)
        ax.set_ylim(-0.01, 1.01)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.set_title(title)
        ax.legend(loc="lower right")
        fig.tight_layout()
    _save(fig, path)


def plot_score_histogram(scores, labels, path: str | Path, threshold: float | None = None) -> None:
    """Overlaid score histograms per class, optionally marking the decision threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    edges = np.histogram_bin_edges(scores, bins=60)
    with matplotlib.rc_context(_STABLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.5))
        ax.hist(scores[~labels], bins=edges, density=True, alpha=0.6, color="C0", label="non-cough")
        ax.hist(scores[labels], bins=edges, density=True, alpha=0.6, color="C3", label="cough")
        if threshold is not None and np.isfinite(threshold):
            ax.axvline(threshold, color="k", ls="--", lw=1, label="RER threshold")
        ax.set_xlabel("score")
        ax.set_ylabel("density")
        ax.legend()
        fig.tight_layout()
    _save(fig, path)
