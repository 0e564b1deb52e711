"""
Command-line entry point.

Usage
-----

    python -m tsl evaluate --gt gt.json --pred pred.json --thresholds 0.1:0.5:0.1
    python -m tsl fuse --inputs a.json b.json c.json --weights 1,1,1 --out fused.json
    python -m tsl nms --input a.json --tiou-threshold 0.5 --out a_nms.json
    python -m tsl align --video v.tslf --audio a1.tslf a2.tslf a3.tslf --out fused.tslf
    python -m tsl concat --inputs a1.tslf a2.tslf --out audio.tslf
    python -m tsl synth --seed 7 --out-gt gt.json --out-dets d1.json d2.json d3.json
    python -m tsl bench --trials 10

Defaults come from ``params.yaml`` (see :mod:`tsl.config`); flags override
them. Reports go to stdout, diagnostics to stderr. Exit codes: 0 on
success, 1 when an input or the parameter file fails validation, 2 on usage
errors, including flag values that are out of range. Flags are checked
before any input file is read.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

from . import __version__
from .benchmark import run_benchmark
from .config import FusionConfig, NoiseConfig, Params, SynthConfig, load_params
from .errors import ConfigError, TSLError, ValidationError, WeightCountMismatch
from .features import align_and_fuse, concat_channels
from .formats import read_features, read_ground_truth, read_predictions, write_detections, write_features
from .fusion import fuse_dataset, nms_1d
from .metrics import TiouThresholds, evaluate
from .synthetic import gen_ground_truth, simulate_detector, synthetic_vocabulary

logger = logging.getLogger("tsl")


class UsageError(Exception):
    """A flag value that is out of range or inconsistent with the other flags."""


def _weights(text: str) -> List[float]:
    try:
        return [float(w) for w in text.split(",") if w.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must be comma-separated numbers, got {text!r}") from None


def _thresholds(text: str) -> TiouThresholds:
    try:
        return TiouThresholds.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsl", description="Temporal sound localisation: evaluation, fusion and feature tools."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--params", default=None, help="Parameter file (default: ./params.yaml if present).")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Only log warnings and errors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="Compute mAP of predictions against ground truth.")
    p.add_argument("--gt", required=True, help="Ground-truth file (no scores).")
    p.add_argument("--pred", required=True, help="Prediction file.")
    p.add_argument("--thresholds", type=_thresholds, default=None, help="lo:hi:step or a,b,c.")
    p.add_argument("--jobs", type=int, default=None, help="Worker threads.")
    p.add_argument("--pretty", action="store_true", help="Print an aligned table instead of JSON.")
    p.add_argument("--out", default=None, help="Also write the report to this file.")

    p = sub.add_parser("fuse", help="Fuse several prediction files with interval WBF.")
    p.add_argument("--inputs", nargs="+", required=True, help="One prediction file per model.")
    p.add_argument("--weights", type=_weights, default=None, help="Comma-separated, one per input.")
    p.add_argument("--cluster-tiou", type=float, default=None)
    p.add_argument("--rescale", choices=["none", "by_count", "by_count_clamped"], default=None)
    p.add_argument("--score-floor", type=float, default=None)
    p.add_argument("--conf-type", choices=["avg", "max"], default=None)
    p.add_argument("--jobs", type=int, default=None, help="Worker threads.")
    p.add_argument("--out", required=True)

    p = sub.add_parser("nms", help="Temporal non-maximum suppression of one prediction file.")
    p.add_argument("--input", required=True)
    p.add_argument("--tiou-threshold", type=float, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("align", help="Resample audio features to the video timeline and concatenate.")
    p.add_argument("--video", required=True)
    p.add_argument("--audio", nargs="*", default=[])
    p.add_argument("--out", required=True)

    p = sub.add_parser("concat", help="Concatenate feature files along channels.")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="Generate synthetic ground truth and simulated detectors.")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--videos", type=int, default=None)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--events", type=int, default=None, help="Events per video.")
    p.add_argument("--duration", type=float, default=None, help="Video duration in seconds.")
    p.add_argument("--min-event", type=float, default=None)
    p.add_argument("--max-event", type=float, default=None)
    p.add_argument("--jitter", type=float, default=None, help="Boundary jitter std in seconds.")
    p.add_argument("--drop", type=float, default=None, help="Per-event drop probability.")
    p.add_argument("--fp-rate", type=float, default=None, help="False positives per video.")
    p.add_argument("--score-noise", type=float, default=None)
    p.add_argument("--out-gt", required=True)
    p.add_argument("--out-dets", nargs="*", default=[], help="One file per simulated detector.")

    p = sub.add_parser("bench", help="Run the synthetic ensemble benchmark.")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--detectors", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    return parser


def _override(model, **changes):
    """Rebuild a config model with the non-None flag values applied.

    The model itself came from a valid parameter file, so a failure here is
    caused by the flags.
    """
    updates = {k: v for k, v in changes.items() if v is not None}
    if not updates:
        return model
    try:
        return type(model)(**{**model.model_dump(), **updates})
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()


def cmd_evaluate(ns: argparse.Namespace, params: Params) -> int:
    thresholds = ns.thresholds or TiouThresholds.parse(params.evaluation.thresholds)
    jobs = ns.jobs or params.evaluation.jobs
    _, gt = read_ground_truth(ns.gt)
    _, preds = read_predictions(ns.pred)
    report = evaluate(preds, gt, thresholds, jobs=jobs)
    text = report.to_table() if ns.pretty else json.dumps(report.to_dict(), indent=2) + "\n"
    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    _emit(text)
    return 0


def fusion_config(ns: argparse.Namespace, params: Params) -> FusionConfig:
    return _override(
        params.fusion,
        weights=tuple(ns.weights) if ns.weights is not None else None,
        cluster_tiou=ns.cluster_tiou,
        rescale_mode=ns.rescale,
        score_floor=ns.score_floor,
        conf_type=ns.conf_type,
    )


def cmd_fuse(ns: argparse.Namespace, params: Params) -> int:
    config = fusion_config(ns, params)
    try:
        config.model_weights(len(ns.inputs))
    except WeightCountMismatch as exc:
        raise UsageError(f"--weights: {exc}") from None
    vocabulary = None
    inputs = []
    for path in ns.inputs:
        vocab, sets = read_predictions(path)
        if vocabulary is not None and vocab != vocabulary:
            raise ValidationError(f"{path} uses a different vocabulary than {ns.inputs[0]}")
        vocabulary = vocab
        inputs.append((path, sets))
    fused = fuse_dataset(inputs, config, jobs=ns.jobs or params.evaluation.jobs)
    write_detections(vocabulary, fused, ns.out)
    return 0


def cmd_nms(ns: argparse.Namespace, params: Params) -> int:
    threshold = _override(params.nms, tiou_threshold=ns.tiou_threshold).tiou_threshold
    vocabulary, sets = read_predictions(ns.input)
    write_detections(vocabulary, [nms_1d(s, threshold) for s in sets], ns.out)
    return 0


def cmd_align(ns: argparse.Namespace, params: Params) -> int:
    video = read_features(ns.video)
    audio = [read_features(path) for path in ns.audio]
    write_features(align_and_fuse(video, audio), ns.out)
    return 0


def cmd_concat(ns: argparse.Namespace, params: Params) -> int:
    write_features(concat_channels([read_features(path) for path in ns.inputs]), ns.out)
    return 0


def cmd_synth(ns: argparse.Namespace, params: Params) -> int:
    synth: SynthConfig = _override(
        params.synthetic,
        seed=ns.seed,
        n_videos=ns.videos,
        n_classes=ns.classes,
        events_per_video=ns.events,
        video_duration=ns.duration,
        min_event_duration=ns.min_event,
        max_event_duration=ns.max_event,
    )
    noise: NoiseConfig = _override(
        params.noise,
        boundary_jitter_std=ns.jitter,
        drop_prob=ns.drop,
        fp_rate=ns.fp_rate,
        score_noise_std=ns.score_noise,
    )
    vocabulary = synthetic_vocabulary(synth.n_classes)
    gt = gen_ground_truth(synth, vocabulary)
    write_detections(vocabulary, gt, ns.out_gt)
    for k, path in enumerate(ns.out_dets):
        detector = simulate_detector(gt, noise.reseeded(synth.seed + 1 + k), vocabulary)
        write_detections(vocabulary, detector, path)
    return 0


def cmd_bench(ns: argparse.Namespace, params: Params) -> int:
    bench = _override(params.benchmark, n_trials=ns.trials, n_detectors=ns.detectors, seed=ns.seed)
    params = params.model_copy(update={"benchmark": bench})
    summary = run_benchmark(params, jobs=ns.jobs or params.evaluation.jobs)
    _emit(json.dumps(summary.to_dict(), indent=2) + "\n")
    return 0


COMMANDS = {
    "evaluate": cmd_evaluate,
    "fuse": cmd_fuse,
    "nms": cmd_nms,
    "align": cmd_align,
    "concat": cmd_concat,
    "synth": cmd_synth,
    "bench": cmd_bench,
}


def _configure_logging(ns: argparse.Namespace) -> None:
    level = logging.DEBUG if ns.verbose else logging.WARNING if ns.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("tsl").setLevel(level)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(ns)
    try:
        params = load_params(ns.params)
        return COMMANDS[ns.command](ns, params)
    except UsageError as exc:
        print(f"tsl {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except TSLError as exc:
        logger.debug("command failed", exc_info=True)
        print(f"tsl {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        logger.debug("command failed", exc_info=True)
        print(f"tsl {ns.command}: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
