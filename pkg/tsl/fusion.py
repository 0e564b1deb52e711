"""
tsl.fusion
----------

Ensembling of interval detections.

:func:`wbf_1d` is Weighted Boxes Fusion specialised to time intervals.
Per class, detections of all models are visited by descending score. Each
one joins an existing cluster or opens a new one. A cluster's fused
interval is the average of member endpoints weighted by
``model weight * score``; its fused score is the model-weighted mean of
member scores. Scores are then rescaled by the number of backing models and
filtered by ``score_floor``.

Cluster assignment is best-match, not first-match: among the clusters that
reach ``cluster_tiou`` the one with the highest tIoU wins, and the
earliest-created cluster wins ties.

With ``exclusive_models`` (the default) a cluster accepts at most one member
per model, so a model's own overlapping detections never fuse together.

:func:`nms_1d` is the greedy temporal NMS used as a baseline suppressor.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .config import ConfType, FusionConfig, RescaleMode
from .core import Detection, DetectionSet, SoundEvent, TimeInterval, validate_detection_set
from .errors import ConfigError, DuplicateVideoId, EmptyInput, VideoIdMismatch
from .metrics import pairwise_tiou, tiou

logger = logging.getLogger(__name__)

__all__ = [
    "Cluster",
    "ConfType",
    "FusionConfig",
    "RescaleMode",
    "cluster_1d",
    "fuse_dataset",
    "nms_1d",
    "wbf_1d",
]


@dataclass(frozen=True)
class Cluster:
    """Detections of one class merged into a single fused detection."""

    members: Tuple[Tuple[int, Detection], ...]
    fused: Detection

    @property
    def n_models(self) -> int:
        return len({model for model, _ in self.members})


def _convex_mean(values: Sequence[float], weights: Sequence[float]) -> float:
    """Weighted mean that stays inside ``[min(values), max(values)]``.

    Computed as an offset from the minimum so that equal values come back
    bit-identical.
    """
    lo = min(values)
    hi = max(values)
    if lo == hi:
        return lo
    total = float(sum(weights))
    mean = lo + sum(w * (v - lo) for v, w in zip(values, weights)) / total
    return min(hi, max(lo, mean))


class _ClusterBuilder:
    def __init__(self, model: int, detection: Detection, weight: float) -> None:
        self.members: List[Tuple[int, Detection]] = []
        self.weights: List[float] = []
        self.models = set()
        self.add(model, detection, weight)

    def add(self, model: int, detection: Detection, weight: float) -> None:
        self.members.append((model, detection))
        self.weights.append(weight)
        self.models.add(model)
        if len(self.members) == 1:
            self.start, self.end = detection.start, detection.end
            return
        scores = [d.score for _, d in self.members]
        bound_weights = [w * s for w, s in zip(self.weights, scores)]
        if sum(bound_weights) <= 0.0:
            bound_weights = list(self.weights)
        self.start = _convex_mean([d.start for _, d in self.members], bound_weights)
        self.end = _convex_mean([d.end for _, d in self.members], bound_weights)

    def fused_score(self, conf_type: ConfType) -> float:
        scores = [d.score for _, d in self.members]
        if conf_type == ConfType.MAX:
            return max(scores)
        return _convex_mean(scores, self.weights)

    def interval(self) -> TimeInterval:
        return TimeInterval(self.start, self.end)


def _rescale(score: float, n_models: int, n_members: int, mode: RescaleMode) -> float:
    if mode == RescaleMode.NONE:
        return score
    if mode == RescaleMode.BY_COUNT:
        return min(1.0, score * n_members / n_models)
    return score * min(n_members, n_models) / n_models


def _check_same_video(inputs: Sequence[DetectionSet]) -> str:
    if not inputs:
        raise EmptyInput("fusion needs at least one detection set")
    video_id = inputs[0].video_id
    for s in inputs[1:]:
        if s.video_id != video_id:
            raise VideoIdMismatch(f"cannot fuse detections of {s.video_id!r} with {video_id!r}")
    return video_id


def _fusion_order(entries: List[Tuple[int, int, Detection]]) -> List[Tuple[int, int, Detection]]:
    # Model index is not part of the key: equal weights make the result
    # independent of model order.
    return sorted(entries, key=lambda e: (-e[2].score, e[2].start, e[2].end))


def cluster_1d(inputs: Sequence[DetectionSet], config: FusionConfig = FusionConfig()) -> List[Cluster]:
    """Cluster the detections of all models, before rescaling and filtering."""
    _check_same_video(inputs)
    weights = config.model_weights(len(inputs))
    inputs = [validate_detection_set(s) for s in inputs]

    by_class: Dict[int, List[Tuple[int, int, Detection]]] = {}
    for model, s in enumerate(inputs):
        for k, det in enumerate(s.detections):
            by_class.setdefault(det.label.id, []).append((model, k, det))  # type: ignore[union-attr]

    clusters: List[Cluster] = []
    for label_id in sorted(by_class):
        builders: List[_ClusterBuilder] = []
        for model, _, det in _fusion_order(by_class[label_id]):
            best, best_overlap = None, -1.0
            for b in builders:
                if config.exclusive_models and model in b.models:
                    continue
                overlap = tiou(b.interval(), det.interval)
                if overlap > best_overlap:
                    best, best_overlap = b, overlap
            if best is not None and best_overlap >= config.cluster_tiou:
                best.add(model, det, weights[model])
            else:
                builders.append(_ClusterBuilder(model, det, weights[model]))
        for b in builders:
            label = b.members[0][1].label
            fused = Detection(SoundEvent(b.interval(), label), b.fused_score(config.conf_type))
            clusters.append(Cluster(tuple(b.members), fused))
        logger.debug("class %d: %d clusters", label_id, len(builders))
    return clusters


def _output_order(detections: List[Detection]) -> List[Detection]:
    return sorted(detections, key=lambda d: (-d.score, d.start, d.end, d.label.id))


def wbf_1d(inputs: Sequence[DetectionSet], config: FusionConfig = FusionConfig()) -> DetectionSet:
    """Fuse one video's detection sets, one set per model.

    Parameters
    ----------
    inputs : list of DetectionSet
        One set per model, all for the same video.
    config : FusionConfig
        Weights, clustering threshold, score rescaling and floor.

    Returns
    -------
    DetectionSet
        Fused detections sorted by descending score.
    """
    video_id = _check_same_video(inputs)
    n_models = len(inputs)
    fused: List[Detection] = []
    for cluster in cluster_1d(inputs, config):
        score = _rescale(cluster.fused.score, n_models, len(cluster.members), config.rescale_mode)
        if score < config.score_floor:
            continue
        fused.append(cluster.fused if score == cluster.fused.score else Detection(cluster.fused.event, score))
    return DetectionSet(video_id, tuple(_output_order(fused)))


def fuse_dataset(
    inputs: Sequence[Tuple[str, Sequence[DetectionSet]]],
    config: FusionConfig = FusionConfig(),
    jobs: int = 1,
) -> List[DetectionSet]:
    """Fuse whole prediction files, video by video.

    ``inputs`` holds ``(model id, detection sets)`` pairs. A model without a
    set for some video contributes an empty set there. Output is ordered by
    video id and does not depend on ``jobs``.
    """
    config.model_weights(len(inputs))
    per_model: List[Dict[str, DetectionSet]] = []
    for model_id, sets in inputs:
        indexed: Dict[str, DetectionSet] = {}
        for s in sets:
            if s.video_id in indexed:
                raise DuplicateVideoId(f"model {model_id!r} lists the video twice", video_id=s.video_id)
            indexed[s.video_id] = s
        per_model.append(indexed)
    videos = sorted({vid for indexed in per_model for vid in indexed})

    def run(video_id: str) -> DetectionSet:
        aligned = [indexed.get(video_id, DetectionSet(video_id)) for indexed in per_model]
        return wbf_1d(aligned, config)

    if jobs > 1 and len(videos) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            fused = list(pool.map(run, videos))
    else:
        fused = [run(v) for v in videos]
    logger.info(
        "fused %d models over %d videos into %d detections",
        len(inputs),
        len(videos),
        sum(len(s) for s in fused),
    )
    return fused


def nms_1d(input: DetectionSet, iou_threshold: float) -> DetectionSet:
    """Greedy temporal non-maximum suppression, per class.

    Keeps the highest-scoring remaining detection and drops same-class
    detections overlapping it with tIoU >= ``iou_threshold``.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ConfigError(f"iou_threshold {iou_threshold} outside (0, 1)")
    input = validate_detection_set(input)
    detections: List[Detection] = list(input.detections)  # type: ignore[arg-type]
    keep: List[Detection] = []
    for label_id in sorted({d.label.id for d in detections}):
        group = _output_order([d for d in detections if d.label.id == label_id])
        bounds = np.array([[d.start, d.end] for d in group]).reshape(-1, 2)
        order = np.arange(len(group))
        while order.size > 0:
            i = order[0]
            keep.append(group[i])
            overlaps = pairwise_tiou(bounds[i], bounds[order[1:]])[0]
            order = order[1:][overlaps < iou_threshold]
    return DetectionSet(input.video_id, tuple(_output_order(keep)))
