"""
tsl.benchmark
-------------

Ensemble benchmark on synthetic data.

Each trial draws a ground-truth dataset and ``n_detectors`` simulated
detectors with independent seeds, then scores

* every detector on its own,
* a temporal-NMS ensemble (all detectors pooled, then suppressed),
* the WBF ensemble of the detectors.

Averaged over trials this shows whether fusing several imperfect models
beats the best of them. Seeds of trial ``t``: ground truth
``seed + 1000 * t``, detector ``k`` ``seed + 1000 * t + 1 + k``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

from .config import Params
from .core import DetectionSet
from .fusion import fuse_dataset, nms_1d
from .metrics import TiouThresholds, evaluate
from .synthetic import gen_ground_truth, simulate_detector

logger = logging.getLogger(__name__)

TRIAL_SEED_STRIDE = 1000


@dataclass(frozen=True)
class TrialResult:
    trial: int
    detector_maps: Tuple[float, ...]
    nms_map: float
    wbf_map: float

    @property
    def best_detector_map(self) -> float:
        return max(self.detector_maps)


@dataclass(frozen=True)
class BenchmarkSummary:
    trials: Tuple[TrialResult, ...]

    @property
    def mean_detector_maps(self) -> Tuple[float, ...]:
        n = len(self.trials)
        k = len(self.trials[0].detector_maps)
        return tuple(sum(t.detector_maps[i] for t in self.trials) / n for i in range(k))

    @property
    def mean_best_detector_map(self) -> float:
        """Mean mAP of the detector that is best on average."""
        return max(self.mean_detector_maps)

    @property
    def mean_nms_map(self) -> float:
        return sum(t.nms_map for t in self.trials) / len(self.trials)

    @property
    def mean_wbf_map(self) -> float:
        return sum(t.wbf_map for t in self.trials) / len(self.trials)

    def to_dict(self) -> dict:
        return {
            "trials": len(self.trials),
            "mean_detector_maps": list(self.mean_detector_maps),
            "mean_best_detector_map": self.mean_best_detector_map,
            "mean_nms_map": self.mean_nms_map,
            "mean_wbf_map": self.mean_wbf_map,
            "wbf_gain": self.mean_wbf_map - self.mean_best_detector_map,
        }


def _pool(detectors: List[List[DetectionSet]]) -> List[DetectionSet]:
    pooled = []
    for per_video in zip(*detectors):
        detections = tuple(d for s in per_video for d in s.detections)
        pooled.append(DetectionSet(per_video[0].video_id, detections))
    return pooled


def run_trial(trial: int, params: Params = Params(), jobs: int = 1) -> TrialResult:
    """Run one trial of the ensemble benchmark."""
    bench = params.benchmark
    base = bench.seed + TRIAL_SEED_STRIDE * trial
    thresholds = TiouThresholds.parse(params.evaluation.thresholds)
    gt = gen_ground_truth(params.synthetic.model_copy(update={"seed": base}))
    detectors = [
        simulate_detector(gt, params.noise.reseeded(base + 1 + k)) for k in range(bench.n_detectors)
    ]
    detector_maps = tuple(evaluate(d, gt, thresholds, jobs).overall_map for d in detectors)
    nms = [nms_1d(s, bench.nms_tiou) for s in _pool(detectors)]
    nms_map = evaluate(nms, gt, thresholds, jobs).overall_map
    fused = fuse_dataset([(f"detector_{k}", d) for k, d in enumerate(detectors)], params.fusion, jobs)
    wbf_map = evaluate(fused, gt, thresholds, jobs).overall_map
    logger.info(
        "trial %d: best detector %.4f, nms %.4f, wbf %.4f",
        trial,
        max(detector_maps),
        nms_map,
        wbf_map,
    )
    return TrialResult(trial, detector_maps, nms_map, wbf_map)


def run_benchmark(params: Params = Params(), jobs: int = 1) -> BenchmarkSummary:
    """Run ``params.benchmark.n_trials`` trials."""
    trials = tuple(run_trial(t, params, jobs) for t in range(params.benchmark.n_trials))
    return BenchmarkSummary(trials)
