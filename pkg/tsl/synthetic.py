"""
tsl.synthetic
-------------

Deterministic synthetic ground truth and noisy detectors.

Random numbers come from numpy's ``PCG64`` bit generator. Each video gets
its own stream seeded by ``SeedSequence([seed, *utf8(video_id)])``, so a
video's output depends only on the seed and its id: the same seed gives the
same data on any platform, in any order and with any number of workers.

A simulated detector drops each event with ``drop_prob``, jitters the kept
boundaries with Gaussian noise and scores the result with the tIoU between
the true and jittered intervals plus Gaussian score noise, clamped to
[0.01, 1]. It also emits ``Poisson(fp_rate)`` false positives per video with
uniform intervals and scores in (0, 0.5].
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import NoiseConfig, SynthConfig
from .core import (
    ClassLabel,
    Detection,
    DetectionSet,
    EventSet,
    SoundEvent,
    TimeInterval,
    Vocabulary,
    vocabulary_of,
)
from .metrics import tiou

logger = logging.getLogger(__name__)

__all__ = [
    "MIN_SEPARATION",
    "NoiseConfig",
    "SynthConfig",
    "gen_ground_truth",
    "simulate_detector",
    "synthetic_vocabulary",
    "video_rng",
]

MIN_SEPARATION = 0.001
MIN_SCORE = 0.01
FP_MAX_SCORE = 0.5


def synthetic_vocabulary(n_classes: int) -> Vocabulary:
    width = max(2, len(str(n_classes - 1)))
    return Vocabulary(tuple(f"class_{i:0{width}d}" for i in range(n_classes)))


def video_rng(seed: int, video_id: str) -> np.random.Generator:
    """Random generator for one video, derived from ``seed`` and the id."""
    entropy = [int(seed)] + list(video_id.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _video_ids(n_videos: int) -> List[str]:
    width = max(4, len(str(n_videos - 1)))
    return [f"video_{i:0{width}d}" for i in range(n_videos)]


def gen_ground_truth(cfg: SynthConfig, vocabulary: Optional[Vocabulary] = None) -> List[EventSet]:
    """Generate ``cfg.n_videos`` event sets with uniformly drawn events.

    Each event gets a uniform class, a uniform duration in
    ``[min_event_duration, max_event_duration]`` and a uniform start that
    keeps it inside ``[0, video_duration]``. Events are sorted by start.
    """
    vocabulary = vocabulary or synthetic_vocabulary(cfg.n_classes)
    sets = []
    for video_id in _video_ids(cfg.n_videos):
        rng = video_rng(cfg.seed, video_id)
        events = []
        for _ in range(cfg.events_per_video):
            label_id = int(rng.integers(cfg.n_classes))
            length = float(rng.uniform(cfg.min_event_duration, cfg.max_event_duration))
            start = float(rng.uniform(0.0, cfg.video_duration - length))
            end = min(start + length, cfg.video_duration)
            events.append(SoundEvent(TimeInterval(start, end), ClassLabel(label_id, vocabulary)))
        events.sort(key=lambda e: (e.start, e.end, e.label.id))
        sets.append(EventSet(video_id, tuple(events), cfg.video_duration))
    logger.info("generated %d synthetic videos (seed %d)", len(sets), cfg.seed)
    return sets


def _repair(start: float, end: float, duration: float) -> Tuple[float, float]:
    """Order and clip jittered bounds into a valid interval inside the video."""
    lo, hi = sorted((start, end))
    lo = min(max(lo, 0.0), duration)
    hi = min(max(hi, 0.0), duration)
    if hi - lo < MIN_SEPARATION:
        hi = lo + MIN_SEPARATION
        if hi > duration:
            hi = duration
            lo = max(0.0, duration - MIN_SEPARATION)
    return lo, hi


def _video_duration(gt: EventSet) -> float:
    if gt.duration is not None:
        return float(gt.duration)
    ends = [e.end for e in gt.events]
    return max(ends) if ends else 1.0


def simulate_detector(
    gt: Sequence[EventSet],
    noise: NoiseConfig,
    vocabulary: Optional[Vocabulary] = None,
) -> List[DetectionSet]:
    """Simulate one imperfect detector over every ground-truth video.

    ``vocabulary`` is only needed to place false positives when the ground
    truth holds no events at all.
    """
    if vocabulary is None:
        vocabulary = vocabulary_of(e for s in gt for e in s.events)
    outputs = []
    for s in gt:
        rng = video_rng(noise.seed, s.video_id)
        duration = _video_duration(s)
        detections = []
        for event in s.events:
            # Draw every variate up front so the stream stays aligned whatever is kept.
            dropped = rng.random() < noise.drop_prob
            jitter = rng.normal(0.0, noise.boundary_jitter_std, size=2)
            score_noise = float(rng.normal(0.0, noise.score_noise_std))
            if dropped:
                continue
            start, end = _repair(event.start + float(jitter[0]), event.end + float(jitter[1]), duration)
            interval = TimeInterval(start, end)
            score = min(1.0, max(MIN_SCORE, tiou(event.interval, interval) + score_noise))
            detections.append(Detection(SoundEvent(interval, event.label), score))
        n_fp = int(rng.poisson(noise.fp_rate)) if vocabulary is not None else 0
        for _ in range(n_fp):
            label_id = int(rng.integers(len(vocabulary)))  # type: ignore[arg-type]
            a, b = rng.uniform(0.0, duration, size=2)
            start, end = _repair(float(a), float(b), duration)
            score = FP_MAX_SCORE - float(rng.uniform(0.0, FP_MAX_SCORE))
            detections.append(Detection.build(start, end, ClassLabel(label_id, vocabulary), score))  # type: ignore[arg-type]
        detections.sort(key=lambda d: (-d.score, d.start, d.end, d.label.id))
        outputs.append(DetectionSet(s.video_id, tuple(detections)))
    logger.debug("simulated detector seed %d over %d videos", noise.seed, len(outputs))
    return outputs
