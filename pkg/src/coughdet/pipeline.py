"""End-to-end run: ingest, extract, rank, select, evaluate, train.

Everything lands in one run directory::

    features/<recording>.fmx   per-recording 105-column matrices
    reports/mi_report.{csv,json}        pairwise MI table over all features
    reports/selection.json              greedy selection on the full data
    reports/selection_report.{csv,json} MI table restricted to the selection
    reports/metrics.json                pooled cross-validation metrics
    roc/roc.csv, roc/roc.svg, roc/scores.csv, roc/scores.svg
    models/model.json                   final model trained on all data
    config.txt, manifest.json

The manifest records the config, the input hashes and a sha256 per artifact.
A failing stage still writes the manifest, marked partial, with the stage
name and the cause.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from coughdet import classifiers
from coughdet.config import RunConfig, write_config
from coughdet.evaluation import CrossValidationResult, RocCurve, cross_validate
from coughdet.features import REGISTRY_VERSION, FeatureMatrix, concat, extract_feature_matrix, write_fmx
from coughdet.frontend import read_wav
from coughdet.infotheory import build_report, select_features
from coughdet.labels import read_labels
from coughdet.plotting import plot_roc, plot_score_histogram

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
STAGES = ("ingest", "extract", "rank", "select", "eval", "train")


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class NumericalError(ArithmeticError):
    pass


@dataclass
class RunResult:
    out_dir: Path
    manifest: dict
    metrics: dict | None = None
    cv: CrossValidationResult | None = field(default=None, repr=False)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_scores(scores, labels, path: str | Path, folds=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["score", "label"] + ([] if folds is None else ["fold"]))
        for i, (s, y) in enumerate(zip(np.asarray(scores, dtype=float), labels)):
            writer.writerow([repr(float(s)), int(y)] + ([] if folds is None else [int(folds[i])]))


def read_scores(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"score", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected 'score' and 'label' columns")
        rows = [(float(r["score"]), int(r["label"])) for r in reader]
    if not rows:
        raise ValueError(f"{path}: no scores")
    scores, labels = zip(*rows)
    return np.array(scores), np.array(labels, dtype=np.uint8)


def write_roc_outputs(curve: RocCurve, scores, labels, roc_dir: Path, title: str = "ROC") -> list[Path]:
    """roc.csv, roc.svg and scores.svg for one pooled curve."""
    roc_dir.mkdir(parents=True, exist_ok=True)
    paths = [roc_dir / "roc.csv", roc_dir / "roc.svg", roc_dir / "scores.svg"]
    curve.write_csv(paths[0])
    plot_roc(curve, paths[1], title)
    plot_score_histogram(scores, labels, paths[2], curve.rer_threshold)
    return paths


def curve_metrics(curve: RocCurve) -> dict:
    tpr, fpr = curve.operating_point()
    return {"tpr": tpr, "fpr": fpr, "rer": curve.rer, "rer_threshold": curve.rer_threshold,
            "auc": curve.auc(), "weights": {"w_tpr": curve.weights[0], "w_fpr": curve.weights[1]}}


def load_inputs(inputs) -> list[tuple[str, object, object]]:
    """Read (wav, labels) path pairs into (recording id, audio, track) triples."""
    loaded = []
    seen: dict[str, int] = {}
    for wav_path, label_path in inputs:
        wav_path = Path(wav_path)
        if not wav_path.is_file():
            raise FileNotFoundError(f"WAV file not found: {wav_path}")
        audio = read_wav(wav_path)
        track = read_labels(label_path) if label_path is not None else None
        rec_id = wav_path.stem
        if rec_id in seen:
            seen[rec_id] += 1
            rec_id = f"{rec_id}-{seen[rec_id]}"
        else:
            seen[rec_id] = 0
        loaded.append((rec_id, audio, track))
    if not loaded:
        raise ValueError("no input recordings")
    return loaded


def check_finite(matrix: FeatureMatrix, what: str) -> None:
    bad = ~np.isfinite(matrix.values)
    if bad.any():
        cols = sorted({matrix.names[j] for j in np.flatnonzero(bad.any(axis=0))})
        raise NumericalError(f"{what}: non-finite values in {', '.join(cols)}")


class _Run:
    """Bookkeeping for one run directory: artifacts, stage and manifest."""

    def __init__(self, config: RunConfig, out_dir: Path, inputs):
        self.config = config
        self.out = out_dir
        self.inputs = inputs
        self.artifacts: list[Path] = []
        self.stage = STAGES[0]
        self.completed: list[str] = []

    def add(self, *paths: Path) -> None:
        self.artifacts.extend(paths)

    def manifest(self, error: BaseException | None = None) -> dict:
        inputs = []
        for wav, labels in self.inputs:
            entry = {"wav": Path(wav).name, "labels": None if labels is None else Path(labels).name}
            for key, p in (("wav_sha256", wav), ("labels_sha256", labels)):
                entry[key] = sha256_file(p) if p is not None and Path(p).is_file() else None
            inputs.append(entry)
        return {
            "manifest_version": MANIFEST_VERSION,
            "registry_version": REGISTRY_VERSION,
            "status": "failed" if error else "complete",
            "partial": error is not None,
            "failed_stage": self.stage if error else None,
            "error": None if error is None else f"{type(error).__name__}: {error}",
            "completed_stages": list(self.completed),
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "inputs": inputs,
            "artifacts": {p.relative_to(self.out).as_posix(): sha256_file(p) for p in sorted(set(self.artifacts))},
        }


def run_pipeline(config: RunConfig, inputs, out_dir: str | Path) -> RunResult:
    """Run every stage on ``inputs``, a list of (wav path, label path) pairs.

    Raises:
        PipelineError: naming the failed stage; the manifest is still written.
    """
    out = Path(out_dir)
    for sub in ("features", "reports", "models", "roc"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    inputs = [(Path(w), None if lab is None else Path(lab)) for w, lab in inputs]
    run = _Run(config, out, inputs)
    write_config(config, out / "config.txt")
    run.add(out / "config.txt")
    try:
        result = _run_stages(run)
    except Exception as exc:
        manifest = run.manifest(exc)
        write_json(manifest, out / "manifest.json")
        raise PipelineError(run.stage, exc) from exc
    manifest = run.manifest()
    write_json(manifest, out / "manifest.json")
    result.manifest = manifest
    return result


def _run_stages(run: _Run) -> RunResult:
    cfg, out = run.config, run.out

    run.stage = "ingest"
    recordings = load_inputs(run.inputs)
    run.completed.append("ingest")

    run.stage = "extract"
    matrices = []
    for rec_id, audio, track in recordings:
        m = extract_feature_matrix(audio, track)
        check_finite(m, rec_id)
        path = out / "features" / f"{rec_id}.fmx"
        write_fmx(m, path)
        run.add(path)
        matrices.append(m)
        log.info("extract %s: %d frames, %d cough", rec_id, len(m), int(m.labels.sum()))
    data = concat(matrices)
    run.completed.append("extract")

    run.stage = "rank"
    report = build_report(data, n_bins=cfg.bins)
    report.write_csv(out / "reports" / "mi_report.csv")
    report.write_json(out / "reports" / "mi_report.json")
    run.add(out / "reports" / "mi_report.csv", out / "reports" / "mi_report.json")
    run.completed.append("rank")

    run.stage = "select"
    k = data.n_features if cfg.selection_k is None else cfg.selection_k
    selection = select_features(data, k, cfg.bins)
    write_json(selection.to_json(), out / "reports" / "selection.json")
    selection.report.write_csv(out / "reports" / "selection_report.csv")
    selection.report.write_json(out / "reports" / "selection_report.json")
    run.add(*(out / "reports" / f for f in ("selection.json", "selection_report.csv", "selection_report.json")))
    run.completed.append("select")

    run.stage = "eval"
    cv = cross_validate(data, cfg.classifier, cfg.selection_k, cfg.seed, cfg.folds, cfg.bins,
                        cfg.w_tpr, cfg.w_fpr, cfg.group_folds, **cfg.hyperparameters())
    metrics = cv.metrics()
    write_json(metrics, out / "reports" / "metrics.json")
    write_scores(cv.scores, cv.labels, out / "roc" / "scores.csv", cv.plan.assignments)
    run.add(out / "reports" / "metrics.json", out / "roc" / "scores.csv")
    title = f"{cfg.classifier.upper()}, {k} features, {cfg.folds}-fold pooled"
    run.add(*write_roc_outputs(cv.curve, cv.scores, cv.labels, out / "roc", title))
    run.completed.append("eval")
    log.info("pooled rer=%.4f auc=%.4f", metrics["rer"], metrics["auc"])

    run.stage = "train"
    model = classifiers.train(cfg.classifier, data.select(selection.order), seed=cfg.seed,
                              **cfg.hyperparameters())
    classifiers.save_model(model, out / "models" / "model.json")
    run.add(out / "models" / "model.json")
    run.completed.append("train")

    return RunResult(out, {}, metrics, cv)


def verify_manifest(run_dir: str | Path) -> list[str]:
    """Artifacts whose current hash differs from the manifest (or that are missing)."""
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    bad = []
    for rel, digest in manifest["artifacts"].items():
        path = run_dir / rel
        if not path.is_file() or sha256_file(path) != digest:
            bad.append(rel)
    return bad
