"""Command-line driver.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Results print to stdout as tab-separated ``key<TAB>value`` lines.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from coughdet import __version__, classifiers
from coughdet.config import ConfigError, RunConfig, read_config
from coughdet.evaluation import compute_rer, cross_validate, sweep_roc
from coughdet.features import extract_feature_matrix, write_csv, write_fmx
from coughdet.features.matrix import read_matrix
from coughdet.frontend import read_wav, write_wav
from coughdet.infotheory import build_report, select_features
from coughdet.labels import read_labels
from coughdet.pipeline import (
    PipelineError,
    check_finite,
    curve_metrics,
    read_scores,
    run_pipeline,
    write_json,
    write_roc_outputs,
    write_scores,
)
from coughdet.synth import SynthSpec, synth_dataset

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("coughdet")


def _common(classifier: bool = False, selection: bool = False, folds: bool = False) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="key = value config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True, help="output file or directory")
    p.add_argument("-v", "--verbose", action="store_true")
    if selection:
        p.add_argument("--features-k", type=int, dest="selection_k", help="features kept by MI selection")
        p.add_argument("--bins", type=int, help="histogram bins per feature (default 50)")
    if classifier:
        p.add_argument("--classifier", choices=classifiers.CLASSIFIERS)
        p.add_argument("--gaussians", type=int, help="GMM components per class")
        p.add_argument("--neurons", type=int, help="MLP hidden units")
    if folds:
        p.add_argument("--folds", type=int)
        p.add_argument("--w-tpr", type=float, dest="w_tpr")
        p.add_argument("--w-fpr", type=float, dest="w_fpr")
        p.add_argument("--group-folds", action="store_true", default=None,
                       help="keep every recording inside a single fold")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coughdet", description="Frame-level cough detection toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[_common()], help="generate a labelled synthetic recording")
    p.add_argument("--duration", type=float, default=60.0, help="seconds (default 60)")
    p.add_argument("--snr", type=float, default=SynthSpec.snr_db, help="background SNR in dB")
    p.add_argument("--coughs-per-minute", type=float, default=SynthSpec.coughs_per_minute)

    p = sub.add_parser("extract", parents=[_common()], help="WAV (+ labels) to a 105-column feature matrix")
    p.add_argument("wav", type=Path)
    p.add_argument("--labels", type=Path, help="tab-separated cough segments")

    p = sub.add_parser("rank", parents=[_common(selection=True)], help="pairwise MI report")
    p.add_argument("features", type=Path)

    p = sub.add_parser("select", parents=[_common(selection=True)], help="greedy MI feature selection")
    p.add_argument("features", type=Path)

    p = sub.add_parser("train", parents=[_common(classifier=True, selection=True)], help="train one model")
    p.add_argument("features", type=Path)

    p = sub.add_parser("eval", parents=[_common(classifier=True, selection=True, folds=True)],
                       help="pooled k-fold cross-validation")
    p.add_argument("features", type=Path)

    p = sub.add_parser("roc", parents=[_common()], help="ROC, RER and figures from scores or a model")
    p.add_argument("input", type=Path, help="scores CSV (score,label) or a feature matrix with --model")
    p.add_argument("--model", type=Path)
    p.add_argument("--w-tpr", type=float, dest="w_tpr")
    p.add_argument("--w-fpr", type=float, dest="w_fpr")

    p = sub.add_parser("run", parents=[_common(classifier=True, selection=True, folds=True)],
                       help="full pipeline into a run directory")
    p.add_argument("wavs", type=Path, nargs="+",
                   help="recordings; labels are read from the same path with a .txt suffix")
    return parser


def resolve_config(args) -> RunConfig:
    config = read_config(args.config) if getattr(args, "config", None) else RunConfig()
    keys = ("seed", "selection_k", "bins", "classifier", "gaussians", "neurons", "folds",
            "w_tpr", "w_fpr", "group_folds")
    return config.replace(**{k: getattr(args, k, None) for k in keys})


def _emit(**values) -> None:
    for key, value in values.items():
        print(f"{key}\t{value}")


def cmd_synth(args, cfg: RunConfig) -> None:
    spec = SynthSpec(duration=args.duration, snr_db=args.snr, coughs_per_minute=args.coughs_per_minute,
                     seed=cfg.seed)
    audio, track = synth_dataset(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    wav = args.out / f"synth-{cfg.seed}.wav"
    write_wav(wav, audio)
    wav.with_suffix(".txt").write_text(track.to_text(), encoding="utf-8")
    _emit(wav=wav, labels=wav.with_suffix(".txt"), segments=len(track.segments), duration=audio.duration)


def cmd_extract(args, cfg: RunConfig) -> None:
    track = read_labels(args.labels) if args.labels else None
    matrix = extract_feature_matrix(read_wav(args.wav), track)
    check_finite(matrix, str(args.wav))
    (write_csv if args.out.suffix.lower() == ".csv" else write_fmx)(matrix, args.out)
    _emit(frames=len(matrix), features=matrix.n_features, cough_frames=int(matrix.labels.sum()))


def _report_paths(out: Path) -> tuple[Path, Path]:
    base = out.with_suffix("") if out.suffix else out
    return base.with_suffix(".csv"), base.with_suffix(".json")


def cmd_rank(args, cfg: RunConfig) -> None:
    matrix = read_matrix(args.features)
    report = build_report(matrix, n_bins=cfg.bins)
    csv_path, json_path = _report_paths(args.out)
    report.write_csv(csv_path)
    report.write_json(json_path)
    order = np.argsort(-report.intrinsic, kind="stable")
    _emit(class_entropy_bits=f"{report.class_entropy:.6f}")
    for i in order[:cfg.selection_k or len(order)]:
        print(f"{report.names[i]}\t{report.intrinsic[i]:.1f}")


def cmd_select(args, cfg: RunConfig) -> None:
    matrix = read_matrix(args.features)
    k = min(cfg.selection_k or matrix.n_features, matrix.n_features)
    result = select_features(matrix, k, cfg.bins)
    write_json(result.to_json(), args.out)
    csv_path, _ = _report_paths(args.out.with_name(args.out.stem + "_report"))
    result.report.write_csv(csv_path)
    for name, score in zip(result.order, result.scores):
        print(f"{name}\t{score:.6f}")


def cmd_train(args, cfg: RunConfig) -> None:
    matrix = read_matrix(args.features)
    if cfg.selection_k is not None and cfg.selection_k < matrix.n_features:
        matrix = matrix.select(select_features(matrix, cfg.selection_k, cfg.bins, with_report=False).order)
    model = classifiers.train(cfg.classifier, matrix, seed=cfg.seed, **cfg.hyperparameters())
    classifiers.save_model(model, args.out)
    _emit(classifier=cfg.classifier, features=len(model.feature_names), frames=len(matrix))


def cmd_eval(args, cfg: RunConfig) -> None:
    matrix = read_matrix(args.features)
    k = min(cfg.selection_k, matrix.n_features) if cfg.selection_k else None
    cv = cross_validate(matrix, cfg.classifier, k, cfg.seed, cfg.folds, cfg.bins, cfg.w_tpr, cfg.w_fpr,
                        cfg.group_folds, **cfg.hyperparameters())
    args.out.mkdir(parents=True, exist_ok=True)
    metrics = cv.metrics()
    write_json(metrics, args.out / "metrics.json")
    write_scores(cv.scores, cv.labels, args.out / "scores.csv", cv.plan.assignments)
    write_roc_outputs(cv.curve, cv.scores, cv.labels, args.out,
                      f"{cfg.classifier.upper()}, {k or matrix.n_features} features")
    _emit(**{key: metrics[key] for key in ("tpr", "fpr", "rer", "rer_threshold", "auc")})


def cmd_roc(args, cfg: RunConfig) -> None:
    if args.model is not None:
        model = classifiers.load_model(args.model)
        matrix = read_matrix(args.input).select(model.feature_names)
        scores, labels = model.score_matrix(matrix), matrix.labels
    else:
        scores, labels = read_scores(args.input)
    curve = sweep_roc(scores, labels)
    compute_rer(curve, cfg.w_tpr, cfg.w_fpr)
    args.out.mkdir(parents=True, exist_ok=True)
    write_roc_outputs(curve, scores, labels, args.out)
    metrics = curve_metrics(curve)
    write_json(metrics, args.out / "metrics.json")
    _emit(**{key: metrics[key] for key in ("tpr", "fpr", "rer", "rer_threshold", "auc")})


def cmd_run(args, cfg: RunConfig) -> None:
    inputs = [(wav, wav.with_suffix(".txt")) for wav in args.wavs]
    result = run_pipeline(cfg, inputs, args.out)
    _emit(**{key: result.metrics[key] for key in ("tpr", "fpr", "rer", "rer_threshold", "auc")},
          manifest=args.out / "manifest.json")


COMMANDS = {
    "synth": cmd_synth, "extract": cmd_extract, "rank": cmd_rank, "select": cmd_select,
    "train": cmd_train, "eval": cmd_eval, "roc": cmd_roc, "run": cmd_run,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        exc = exc.cause
    if isinstance(exc, (ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    return EXIT_DATA


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"coughdet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args, cfg)
    except PipelineError as exc:
        print(f"coughdet: error: stage={exc.stage}: {exc.cause}", file=sys.stderr)
        return exit_code_for(exc)
    except (ValueError, KeyError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"coughdet: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
