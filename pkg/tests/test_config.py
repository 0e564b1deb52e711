from pathlib import Path

import pytest

from tsl.config import (
    BenchmarkConfig,
    FusionConfig,
    NoiseConfig,
    Params,
    RescaleMode,
    SynthConfig,
    load_params,
)
from tsl.errors import ConfigError, WeightCountMismatch


def test_defaults():
    params = Params()
    assert params.evaluation.thresholds == "0.1:0.5:0.1"
    assert params.fusion.cluster_tiou == 0.55
    assert params.fusion.rescale_mode is RescaleMode.BY_COUNT_CLAMPED
    assert params.fusion.exclusive_models is True
    assert params.nms.tiou_threshold == 0.5
    assert params.synthetic.n_classes == 17
    assert params.benchmark.n_detectors == 3


def test_repository_params_file_matches_defaults():
    assert load_params(Path(__file__).resolve().parent.parent / "params.yaml") == Params()


def test_missing_default_file_falls_back(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert load_params() == Params()


def test_partial_file(tmp_path):
    path = tmp_path / "params.yaml"
    path.write_text("fusion:\n  rescale_mode: none\n  weights: [1, 2]\nnoise:\n  drop_prob: 0.3\n")
    params = load_params(path)
    assert params.fusion.rescale_mode is RescaleMode.NONE
    assert params.fusion.weights == (1.0, 2.0)
    assert params.noise.drop_prob == 0.3
    assert params.noise.boundary_jitter_std == 0.4


@pytest.mark.parametrize(
    "text",
    [
        "fusion:\n  cluster_tiou: 2.0\n",
        "fusion:\n  colour: blue\n",
        "plotting:\n  dpi: 300\n",
        "- just\n- a list\n",
        "fusion: [1, 2]\n",
        "fusion: {cluster_tiou: 0.5\n",
        "synthetic:\n  min_event_duration: 9.0\n  max_event_duration: 8.0\n",
    ],
)
def test_invalid_files(tmp_path, text):
    path = tmp_path / "params.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_params(path)


def test_explicit_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_params(tmp_path / "absent.yaml")


def test_models_are_frozen():
    config = FusionConfig()
    with pytest.raises(Exception):
        config.cluster_tiou = 0.3  # type: ignore[misc]


def test_model_weights():
    assert FusionConfig().model_weights(3) == [1.0, 1.0, 1.0]
    assert FusionConfig(weights=(2.0, 1.0)).model_weights(2) == [2.0, 1.0]
    with pytest.raises(WeightCountMismatch):
        FusionConfig(weights=(2.0, 1.0)).model_weights(3)


def test_range_checks():
    with pytest.raises(ConfigError):
        NoiseConfig(drop_prob=1.0)
    with pytest.raises(ConfigError):
        SynthConfig(seed=-1)
    with pytest.raises(ConfigError):
        BenchmarkConfig(n_trials=0)
    with pytest.raises(ConfigError):
        FusionConfig(score_floor=1.0)
    assert NoiseConfig(seed=1).reseeded(5).seed == 5
