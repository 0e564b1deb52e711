"""
tsl.metrics
-----------

Temporal IoU, greedy detection/ground-truth matching, average precision and
mAP over a grid of tIoU thresholds.

Matching follows the PASCAL protocol adapted to intervals: detections are
visited by descending score (ties: earlier start, then input order), each
one claims the unmatched same-class ground-truth event with the highest tIoU
if that tIoU reaches the threshold. AP integrates the all-points precision
envelope. mAP at a threshold averages AP over classes that have at least one
ground-truth event; classes without ground truth are excluded from the mean
but still listed in the per-class counts. The overall mAP averages the
per-threshold values.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    Detection,
    DetectionSet,
    EventSet,
    SoundEvent,
    TimeInterval,
    Vocabulary,
    validate_detection_set,
    validate_event_set,
    vocabulary_of,
)
from .errors import (
    ConfigError,
    DuplicateVideoId,
    EmptyGroundTruth,
    NoGroundTruth,
    UnknownVideoId,
    ValidationError,
    VideoIdMismatch,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TiouThresholds:
    """Strictly increasing tIoU thresholds, each in (0, 1]."""

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("at least one tIoU threshold is required")
        for i, v in enumerate(values):
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"tIoU threshold {v} outside (0, 1]")
            if i and v <= values[i - 1]:
                raise ConfigError("tIoU thresholds must be strictly increasing")
        object.__setattr__(self, "values", values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def parse(cls, text: str) -> "TiouThresholds":
        """Parse ``"lo:hi:step"`` (endpoint inclusive), ``"a,b,c"`` or ``"x"``.

        Ranges are stepped in exact decimal arithmetic, so ``0.1:0.5:0.1``
        gives exactly ``0.1, 0.2, 0.3, 0.4, 0.5``.
        """
        text = text.strip()
        try:
            if ":" in text:
                parts = [Decimal(p) for p in text.split(":")]
                if len(parts) != 3:
                    raise ConfigError(f"threshold range {text!r} must be lo:hi:step")
                lo, hi, step = parts
                if step <= 0 or hi < lo:
                    raise ConfigError(f"threshold range {text!r} is empty or has a non-positive step")
                count = (hi - lo) / step
                if count != count.to_integral_value():
                    raise ConfigError(f"step of {text!r} does not land on the upper bound")
                values = [float(lo + k * step) for k in range(int(count) + 1)]
            else:
                values = [float(Decimal(p)) for p in text.split(",") if p.strip()]
        except InvalidOperation:
            raise ConfigError(f"cannot parse thresholds {text!r}") from None
        return cls(tuple(values))


DEFAULT_THRESHOLDS = TiouThresholds((0.1, 0.2, 0.3, 0.4, 0.5))


def tiou(a: TimeInterval, b: TimeInterval) -> float:
    """Temporal intersection over union of two intervals."""
    inter = min(a.end, b.end) - max(a.start, b.start)
    if inter <= 0.0:
        return 0.0
    union = (a.end - a.start) + (b.end - b.start) - inter
    return inter / union


def pairwise_tiou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """tIoU matrix between ``(n, 2)`` and ``(m, 2)`` arrays of ``[start, end]``."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    lo = np.maximum(a[:, None, 0], b[None, :, 0])
    hi = np.minimum(a[:, None, 1], b[None, :, 1])
    inter = np.maximum(hi - lo, 0.0)
    union = (a[:, 1] - a[:, 0])[:, None] + (b[:, 1] - b[:, 0])[None, :] - inter
    return inter / union


def detection_order(detections: Sequence[Detection]) -> List[int]:
    """Indices by descending score, ties by earlier start then input order."""
    return sorted(range(len(detections)), key=lambda i: (-detections[i].score, detections[i].start, i))


def _greedy_match(
    order: Sequence[int],
    det_bounds: np.ndarray,
    gt_bounds: np.ndarray,
    threshold: float,
) -> Dict[int, Optional[int]]:
    # Detections and ground truth are already restricted to one class of one video.
    matches: Dict[int, Optional[int]] = {}
    if len(gt_bounds) == 0:
        return {i: None for i in order}
    overlaps = pairwise_tiou(det_bounds, gt_bounds)
    taken = np.zeros(len(gt_bounds), dtype=bool)
    for i in order:
        row = np.where(taken, -1.0, overlaps[i])
        j = int(np.argmax(row))
        if not taken[j] and row[j] >= threshold:
            taken[j] = True
            matches[i] = j
        else:
            matches[i] = None
    return matches


def match_detections(
    dets: DetectionSet, gt: EventSet, threshold: float
) -> List[Tuple[int, Optional[int]]]:
    """Greedily match the detections of one video to its ground truth.

    Returns ``(detection index, ground-truth index or None)`` pairs in the
    order detections were processed (descending score).
    """
    if dets.video_id != gt.video_id:
        raise VideoIdMismatch(f"detections for {dets.video_id!r} matched against {gt.video_id!r}")
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"tIoU threshold {threshold} outside (0, 1]")
    dets = validate_detection_set(dets)
    gt = validate_event_set(gt)
    detections: Sequence[Detection] = dets.detections  # type: ignore[assignment]
    events: Sequence[SoundEvent] = gt.events  # type: ignore[assignment]
    order = detection_order(detections)
    result: Dict[int, Optional[int]] = {}
    for label_id in sorted({d.label.id for d in detections}):
        det_idx = [i for i in order if detections[i].label.id == label_id]
        gt_idx = [j for j, e in enumerate(events) if e.label.id == label_id]
        det_bounds = np.array([[detections[i].start, detections[i].end] for i in det_idx]).reshape(-1, 2)
        gt_bounds = np.array([[events[j].start, events[j].end] for j in gt_idx]).reshape(-1, 2)
        local = _greedy_match(range(len(det_idx)), det_bounds, gt_bounds, threshold)
        for k, m in local.items():
            result[det_idx[k]] = None if m is None else gt_idx[m]
    return [(i, result[i]) for i in order]


def precision_recall(
    detections: Sequence[Tuple[str, Detection]],
    ground_truth: Sequence[Tuple[str, SoundEvent]],
    threshold: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Recall and precision after each ranked detection of one class.

    ``detections`` and ``ground_truth`` are ``(video_id, item)`` pairs pooled
    over all videos; the detection list order is the input order used to
    break score ties.
    """
    if not ground_truth:
        raise NoGroundTruth("class has no ground-truth events")
    order = sorted(
        range(len(detections)),
        key=lambda i: (-detections[i][1].score, detections[i][1].start, i),
    )
    gt_by_video: Dict[str, List[SoundEvent]] = {}
    for video_id, event in ground_truth:
        gt_by_video.setdefault(video_id, []).append(event)
    det_by_video: Dict[str, List[int]] = {}
    for rank, i in enumerate(order):
        det_by_video.setdefault(detections[i][0], []).append(rank)

    tp = np.zeros(len(order), dtype=bool)
    for video_id, ranks in det_by_video.items():
        events = gt_by_video.get(video_id, [])
        det_bounds = np.array(
            [[detections[order[r]][1].start, detections[order[r]][1].end] for r in ranks]
        ).reshape(-1, 2)
        gt_bounds = np.array([[e.start, e.end] for e in events]).reshape(-1, 2)
        matches = _greedy_match(range(len(ranks)), det_bounds, gt_bounds, threshold)
        for k, m in matches.items():
            tp[ranks[k]] = m is not None

    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(~tp)
    recall = tp_cum / float(len(ground_truth))
    precision = tp_cum / np.maximum(tp_cum + fp_cum, 1)
    return recall, precision


def interpolated_ap(recall: np.ndarray, precision: np.ndarray) -> float:
    """Area under the all-points precision envelope."""
    if len(recall) == 0:
        return 0.0
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    idx = np.where(mrec[1:] != mrec[:-1])[0]
    lo, hi, level = mrec[idx], mrec[idx + 1], mpre[idx + 1]
    # Integrate runs of equal precision in one step so that a perfect
    # ranking yields exactly 1.0.
    run = np.concatenate(([True], level[1:] != level[:-1]))
    starts = lo[run]
    ends = np.append(starts[1:], hi[-1])
    return float(np.sum((ends - starts) * level[run]))


def average_precision(
    dets: Sequence[Tuple[str, Detection]],
    gts: Sequence[Tuple[str, SoundEvent]],
    threshold: float,
) -> float:
    """AP of one class at one tIoU threshold.

    Parameters
    ----------
    dets : sequence of (video_id, Detection)
        Every detection of the class, across videos.
    gts : sequence of (video_id, SoundEvent)
        Every ground-truth event of the class. Must be non-empty.
    threshold : float
        Minimum tIoU for a true positive.
    """
    recall, precision = precision_recall(dets, gts, threshold)
    ap = interpolated_ap(recall, precision)
    return min(1.0, max(0.0, ap))


@dataclass(frozen=True)
class ClassCounts:
    ground_truth: int
    detections: int


@dataclass(frozen=True)
class EvalReport:
    """Result of :func:`evaluate`.

    ``ap[c][t]`` is the AP of class ``c`` at threshold ``t``, or None when the
    class has no ground truth.
    """

    vocabulary: Vocabulary
    thresholds: TiouThresholds
    ap: Tuple[Tuple[Optional[float], ...], ...]
    per_threshold_map: Tuple[float, ...]
    overall_map: float
    counts: Dict[str, ClassCounts] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "overall_map": self.overall_map,
            "thresholds": list(self.thresholds.values),
            "per_threshold_map": list(self.per_threshold_map),
            "per_class": {
                name: {
                    "ap": list(self.ap[c]),
                    "ground_truth": self.counts[name].ground_truth,
                    "detections": self.counts[name].detections,
                }
                for c, name in enumerate(self.vocabulary.names)
            },
        }

    def to_table(self) -> str:
        """Aligned plain-text rendering for people reading results offline."""
        width = max([len("class"), len("mAP")] + [len(n) for n in self.vocabulary.names])
        header = "class".ljust(width) + "".join(f"  tIoU={t:<4g}" for t in self.thresholds) + "  #gt  #det"
        lines = [header, "-" * len(header)]
        for c, name in enumerate(self.vocabulary.names):
            cells = "".join(
                f"  {'-':>9}" if v is None else f"  {v:9.4f}" for v in self.ap[c]
            )
            counts = self.counts[name]
            lines.append(f"{name.ljust(width)}{cells}  {counts.ground_truth:>3}  {counts.detections:>4}")
        lines.append("-" * len(header))
        lines.append("mAP".ljust(width) + "".join(f"  {v:9.4f}" for v in self.per_threshold_map))
        lines.append(f"overall mAP: {self.overall_map:.4f}")
        return "\n".join(lines) + "\n"


def _index_sets(sets, kind: str) -> Dict[str, object]:
    indexed: Dict[str, object] = {}
    for s in sets:
        if s.video_id in indexed:
            raise DuplicateVideoId(f"{kind} lists video {s.video_id!r} twice", video_id=s.video_id)
        indexed[s.video_id] = s
    return indexed


def evaluate(
    preds: Sequence[DetectionSet],
    gts: Sequence[EventSet],
    thresholds: TiouThresholds = DEFAULT_THRESHOLDS,
    jobs: int = 1,
) -> EvalReport:
    """Compute per-class AP, per-threshold mAP and overall mAP.

    Parameters
    ----------
    preds : list of DetectionSet
        Predictions; every video id must appear in ``gts``.
    gts : list of EventSet
        Ground truth; videos without predictions count as misses.
    thresholds : TiouThresholds
        tIoU grid, by default 0.1 to 0.5 in steps of 0.1.
    jobs : int
        Worker threads for the (class, threshold) grid. The report does not
        depend on it.
    """
    gt_index = _index_sets([validate_event_set(g) for g in gts], "ground truth")
    pred_index = _index_sets([validate_detection_set(p) for p in preds], "predictions")
    for video_id in pred_index:
        if video_id not in gt_index:
            raise UnknownVideoId("predictions for a video absent from the ground truth", video_id=video_id)

    gt_items = [(vid, e) for vid in sorted(gt_index) for e in gt_index[vid].events]  # type: ignore[attr-defined]
    if not gt_items:
        raise EmptyGroundTruth("ground truth holds no events")
    # Input order of predictions is kept: it breaks score ties.
    det_items = [(p.video_id, d) for p in preds for d in pred_index[p.video_id].detections]  # type: ignore[attr-defined]

    try:
        vocabulary = vocabulary_of(item for _, item in gt_items + det_items)
    except ValidationError:
        raise ValidationError("ground truth and predictions use different vocabularies") from None

    n_classes = len(vocabulary)
    gt_by_class: List[List[Tuple[str, SoundEvent]]] = [[] for _ in range(n_classes)]
    det_by_class: List[List[Tuple[str, Detection]]] = [[] for _ in range(n_classes)]
    for vid, e in gt_items:
        gt_by_class[e.label.id].append((vid, e))
    for vid, d in det_items:
        det_by_class[d.label.id].append((vid, d))

    tasks = [(c, t) for c in range(n_classes) if gt_by_class[c] for t in range(len(thresholds))]

    def run(task: Tuple[int, int]) -> float:
        c, t = task
        return average_precision(det_by_class[c], gt_by_class[c], thresholds.values[t])

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(task) for task in tasks]

    ap: List[List[Optional[float]]] = [[None] * len(thresholds) for _ in range(n_classes)]
    for (c, t), value in zip(tasks, results):
        ap[c][t] = value

    evaluated = [c for c in range(n_classes) if gt_by_class[c]]
    per_threshold = tuple(
        float(sum(ap[c][t] for c in evaluated) / len(evaluated))  # type: ignore[misc]
        for t in range(len(thresholds))
    )
    overall = float(sum(per_threshold) / len(per_threshold))
    counts = {
        name: ClassCounts(len(gt_by_class[c]), len(det_by_class[c]))
        for c, name in enumerate(vocabulary.names)
    }
    logger.info(
        "evaluated %d videos, %d classes with ground truth: mAP %.4f",
        len(gt_index),
        len(evaluated),
        overall,
    )
    return EvalReport(
        vocabulary=vocabulary,
        thresholds=thresholds,
        ap=tuple(tuple(row) for row in ap),
        per_threshold_map=per_threshold,
        overall_map=overall,
        counts=counts,
    )
