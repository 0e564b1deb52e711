"""
tsl.features
------------

Feature streams and early fusion.

A :class:`FeatureStream` is the ``T x C`` matrix of per-frame embeddings a
pretrained backbone produces for one video. Audio streams are brought onto
the video timeline with :func:`linear_resample` and joined along the channel
axis with :func:`concat_channels`; :func:`align_and_fuse` does both, video
channels first.

Resampling maps output row ``i`` to source position
``p = i * (T - 1) / (target - 1)`` (endpoint aligned) and interpolates
linearly between rows ``floor(p)`` and ``ceil(p)``. Resampling to one frame
returns the first source frame. Interpolation runs in float64 and the result
is rounded once to float32, which keeps every value inside its source pair.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput, FrameCountMismatch, InvalidFeatureStream, VideoIdMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FeatureStream:
    """Per-frame float32 feature vectors of one video, stored row-major by frame."""

    video_id: str
    data: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.video_id, str):
            raise InvalidFeatureStream(f"video id must be a string, got {self.video_id!r}")
        raw = np.asarray(self.data, dtype=np.float64)
        if raw.ndim != 2:
            raise InvalidFeatureStream(f"feature data must be 2-D, got shape {raw.shape}", video_id=self.video_id)
        if raw.shape[0] < 1 or raw.shape[1] < 1:
            raise InvalidFeatureStream(f"feature data needs T >= 1 and C >= 1, got {raw.shape}", video_id=self.video_id)
        if not np.all(np.isfinite(raw)):
            raise InvalidFeatureStream("feature data holds non-finite values", video_id=self.video_id)
        # Values are held at the precision the feature file stores.
        with np.errstate(over="ignore"):
            data = raw.astype(np.float32)
        if not np.all(np.isfinite(data)):
            raise InvalidFeatureStream("feature values overflow float32", video_id=self.video_id)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def frames(self) -> int:
        return int(self.data.shape[0])

    @property
    def channels(self) -> int:
        return int(self.data.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureStream):
            return NotImplemented
        return self.video_id == other.video_id and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.video_id, self.data.shape, self.data.tobytes()))


def linear_resample(s: FeatureStream, target_frames: int) -> FeatureStream:
    """Resample a stream to ``target_frames`` rows by linear interpolation.

    Parameters
    ----------
    s : FeatureStream
        Source stream with ``T`` frames.
    target_frames : int
        Number of output frames, at least 1.

    Returns
    -------
    FeatureStream
        Same video id and channel count. Resampling to ``T`` returns the
        data unchanged; first and last rows are always preserved.
    """
    if isinstance(target_frames, bool) or not isinstance(target_frames, (int, np.integer)) or target_frames < 1:
        raise InvalidFeatureStream(f"target_frames must be a positive integer, got {target_frames!r}")
    target_frames = int(target_frames)
    n = s.frames
    if target_frames == n:
        return s
    if target_frames == 1:
        return FeatureStream(s.video_id, s.data[:1])
    # Integer numerator keeps p exact at the endpoints.
    position = (np.arange(target_frames, dtype=np.int64) * (n - 1)) / (target_frames - 1)
    lo = np.floor(position).astype(np.int64)
    hi = np.minimum(lo + 1, n - 1)
    frac = (position - lo)[:, None]
    a = s.data[lo].astype(np.float64)
    b = s.data[hi].astype(np.float64)
    out = a + (b - a) * frac
    out = np.clip(out, np.minimum(a, b), np.maximum(a, b))
    logger.debug("resampled %s from %d to %d frames", s.video_id, n, target_frames)
    return FeatureStream(s.video_id, out)


def concat_channels(streams: Sequence[FeatureStream]) -> FeatureStream:
    """Concatenate streams along the channel axis, in list order."""
    if not streams:
        raise EmptyInput("concat_channels needs at least one stream")
    first = streams[0]
    for s in streams[1:]:
        if s.video_id != first.video_id:
            raise VideoIdMismatch(f"cannot concatenate {s.video_id!r} with {first.video_id!r}")
        if s.frames != first.frames:
            raise FrameCountMismatch(
                f"stream has {s.frames} frames, expected {first.frames}", video_id=first.video_id
            )
    if len(streams) == 1:
        return first
    return FeatureStream(first.video_id, np.concatenate([s.data for s in streams], axis=1))


def align_and_fuse(video: FeatureStream, audio_parts: Sequence[FeatureStream]) -> FeatureStream:
    """Early fusion: resample audio to the video timeline, then concatenate.

    The audio parts are concatenated with each other first, then appended
    after the video channels.
    """
    if not audio_parts:
        return video
    for part in audio_parts:
        if part.video_id != video.video_id:
            raise VideoIdMismatch(f"audio stream {part.video_id!r} does not belong to {video.video_id!r}")
    aligned = [linear_resample(part, video.frames) for part in audio_parts]
    audio = concat_channels(aligned)
    fused = concat_channels([video, audio])
    logger.debug(
        "fused %s: %d video + %d audio channels over %d frames",
        video.video_id,
        video.channels,
        audio.channels,
        video.frames,
    )
    return fused
