"""
tsl.config
----------

Configuration objects and the ``params.yaml`` loader.

All configuration is held in frozen pydantic models. Field validators enforce
the documented ranges; any failure surfaces as :class:`~tsl.errors.ConfigError`
rather than a pydantic exception, so callers only ever catch ``TSLError``.

``params.yaml`` mirrors :class:`Params`: one mapping per section, every key
optional. Missing keys fall back to the defaults below.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from .errors import ConfigError, WeightCountMismatch

logger = logging.getLogger(__name__)

DEFAULT_PARAMS_FILE = "params.yaml"


class ConfigModel(BaseModel):
    """Frozen pydantic model whose validation failures raise ConfigError."""

    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    def __init__(self, **data: Any) -> None:
        try:
            super().__init__(**data)
        except PydanticValidationError as exc:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
                for err in exc.errors()
            )
            raise ConfigError(f"{type(self).__name__}: {problems}") from None


class RescaleMode(str, Enum):
    """How a fused score is scaled by the number of models backing it."""

    NONE = "none"
    BY_COUNT = "by_count"
    BY_COUNT_CLAMPED = "by_count_clamped"


class ConfType(str, Enum):
    """How member scores combine into the fused score."""

    AVG = "avg"
    MAX = "max"


class FusionConfig(ConfigModel):
    """Parameters of the interval Weighted Boxes Fusion.

    ``weights`` of None means one equal weight per model.
    """

    weights: Optional[Tuple[float, ...]] = None
    cluster_tiou: float = 0.55
    rescale_mode: RescaleMode = RescaleMode.BY_COUNT_CLAMPED
    score_floor: float = 0.0
    conf_type: ConfType = ConfType.AVG
    exclusive_models: bool = True

    @field_validator("weights")
    @classmethod
    def _positive_weights(cls, v: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
        if v is None:
            return v
        if not v:
            raise ValueError("weights must not be empty")
        for w in v:
            if not math.isfinite(w) or w <= 0:
                raise ValueError(f"weight {w} must be positive and finite")
        return v

    @field_validator("cluster_tiou")
    @classmethod
    def _open_unit(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError(f"cluster_tiou {v} outside (0, 1)")
        return v

    @field_validator("score_floor")
    @classmethod
    def _floor_range(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError(f"score_floor {v} outside [0, 1)")
        return v

    def model_weights(self, n_models: int) -> List[float]:
        """Return one weight per model, checking the count."""
        if self.weights is None:
            return [1.0] * n_models
        if len(self.weights) != n_models:
            raise WeightCountMismatch(f"{len(self.weights)} weights given for {n_models} models")
        return list(self.weights)


class NmsConfig(ConfigModel):
    tiou_threshold: float = 0.5

    @field_validator("tiou_threshold")
    @classmethod
    def _open_unit(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError(f"tiou_threshold {v} outside (0, 1)")
        return v


class EvaluationConfig(ConfigModel):
    thresholds: str = "0.1:0.5:0.1"
    jobs: int = Field(default=1, ge=1)


_SEED_RANGE = dict(ge=0, lt=2**64)


class SynthConfig(ConfigModel):
    """Shape of a synthetic ground-truth dataset."""

    seed: int = Field(default=0, **_SEED_RANGE)
    n_videos: int = Field(default=50, ge=0)
    n_classes: int = Field(default=17, ge=1)
    events_per_video: int = Field(default=5, ge=0)
    video_duration: float = Field(default=60.0, gt=0)
    min_event_duration: float = Field(default=2.0, gt=0)
    max_event_duration: float = Field(default=8.0, gt=0)

    @model_validator(mode="after")
    def _duration_bounds(self) -> "SynthConfig":
        if not self.min_event_duration <= self.max_event_duration <= self.video_duration:
            raise ValueError(
                "event durations must satisfy 0 < min <= max <= video_duration, got "
                f"{self.min_event_duration}, {self.max_event_duration}, {self.video_duration}"
            )
        return self


class NoiseConfig(ConfigModel):
    """Imperfections of a simulated detector."""

    seed: int = Field(default=1, **_SEED_RANGE)
    boundary_jitter_std: float = Field(default=0.4, ge=0)
    drop_prob: float = Field(default=0.1, ge=0, lt=1)
    fp_rate: float = Field(default=1.0, ge=0)
    score_noise_std: float = Field(default=0.1, ge=0)

    def reseeded(self, seed: int) -> "NoiseConfig":
        return self.model_copy(update={"seed": seed})


class BenchmarkConfig(ConfigModel):
    """Ensemble benchmark: K simulated detectors fused over several trials."""

    seed: int = Field(default=2024, **_SEED_RANGE)
    n_trials: int = Field(default=10, ge=1)
    n_detectors: int = Field(default=3, ge=1)
    nms_tiou: float = Field(default=0.5, gt=0, lt=1)


class Params(ConfigModel):
    """Every section of ``params.yaml``."""

    evaluation: EvaluationConfig = EvaluationConfig()
    fusion: FusionConfig = FusionConfig()
    nms: NmsConfig = NmsConfig()
    synthetic: SynthConfig = SynthConfig()
    noise: NoiseConfig = NoiseConfig()
    benchmark: BenchmarkConfig = BenchmarkConfig()


def load_params(path: Optional[Union[str, Path]] = None) -> Params:
    """Load ``params.yaml``.

    With ``path`` None, ``params.yaml`` in the working directory is used when
    present and the built-in defaults otherwise. An explicit path that does
    not exist is an error.
    """
    if path is None:
        candidate = Path(DEFAULT_PARAMS_FILE)
        if not candidate.is_file():
            logger.debug("no %s found, using built-in defaults", DEFAULT_PARAMS_FILE)
            return Params()
        path = candidate
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"parameter file {path} is not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"parameter file {path} must hold a mapping of sections")
    sections = {}
    for name, model in Params.model_fields.items():
        section = raw.pop(name, None) or {}
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} of {path} must be a mapping")
        sections[name] = model.annotation(**section)  # type: ignore[misc]
    if raw:
        raise ConfigError(f"unknown sections in {path}: {', '.join(sorted(raw))}")
    logger.info("loaded parameters from %s", path)
    return Params(**sections)
