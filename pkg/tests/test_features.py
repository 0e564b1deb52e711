import numpy as np
import pytest

from tsl.errors import EmptyInput, FrameCountMismatch, InvalidFeatureStream, VideoIdMismatch
from tsl.features import FeatureStream, align_and_fuse, concat_channels, linear_resample


def _stream(frames, channels, video_id="v1", seed=0):
    rng = np.random.default_rng(seed)
    return FeatureStream(video_id, rng.normal(size=(frames, channels)))


def test_stream_is_read_only_copy():
    data = np.ones((3, 2))
    s = FeatureStream("v1", data)
    data[0, 0] = 5.0
    assert s.data[0, 0] == 1.0
    assert (s.frames, s.channels) == (3, 2)
    with pytest.raises(ValueError):
        s.data[0, 0] = 2.0


@pytest.mark.parametrize(
    "data", [np.ones(4), np.ones((0, 3)), np.ones((3, 0)), np.array([[1.0, np.nan]]), np.array([[1e39]])]
)
def test_stream_rejects(data):
    with pytest.raises(InvalidFeatureStream):
        FeatureStream("v1", data)


def test_three_audio_parts_make_2304_channels():
    parts = [_stream(10, 768, seed=k) for k in range(3)]
    fused = concat_channels(parts)
    assert fused.channels == 2304
    assert fused.frames == 10
    np.testing.assert_array_equal(fused.data[:, 768:1536], parts[1].data)


def test_concat_single_stream_unchanged():
    s = _stream(4, 3)
    assert concat_channels([s]) == s


def test_concat_is_associative():
    a, b, c = _stream(5, 2, seed=1), _stream(5, 3, seed=2), _stream(5, 4, seed=3)
    assert concat_channels([concat_channels([a, b]), c]) == concat_channels([a, b, c])


def test_concat_errors():
    with pytest.raises(EmptyInput):
        concat_channels([])
    with pytest.raises(FrameCountMismatch):
        concat_channels([_stream(10, 2), _stream(12, 2)])
    with pytest.raises(VideoIdMismatch):
        concat_channels([_stream(10, 2), _stream(10, 2, video_id="v2")])


def test_align_and_fuse_channel_layout():
    video = _stream(8, 1024)
    audio = [_stream(8, 768, seed=k + 1) for k in range(3)]
    fused = align_and_fuse(video, audio)
    assert (fused.frames, fused.channels) == (8, 3328)
    np.testing.assert_array_equal(fused.data[:, :1024], video.data)


def test_align_and_fuse_resamples_audio():
    fused = align_and_fuse(_stream(8, 4), [_stream(16, 2, seed=1)])
    assert (fused.frames, fused.channels) == (8, 6)


def test_align_and_fuse_without_audio():
    video = _stream(8, 4)
    assert align_and_fuse(video, []) is video


def test_align_and_fuse_rejects_foreign_audio():
    with pytest.raises(VideoIdMismatch):
        align_and_fuse(_stream(8, 4), [_stream(8, 2, video_id="v2")])


def test_resample_known_values():
    s = FeatureStream("v1", np.array([[0.0], [10.0]]))
    out = linear_resample(s, 5)
    np.testing.assert_allclose(out.data[:, 0], [0.0, 2.5, 5.0, 7.5, 10.0])
    assert linear_resample(s, 1).data.tolist() == [[0.0]]


def test_resample_rejects_bad_target():
    with pytest.raises(InvalidFeatureStream):
        linear_resample(_stream(4, 2), 0)


def test_resample_properties_on_random_streams():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        frames = int(rng.integers(1, 40))
        channels = int(rng.integers(1, 6))
        s = FeatureStream("v1", rng.normal(scale=100.0, size=(frames, channels)))
        target = int(rng.integers(1, 80))
        out = linear_resample(s, target)

        assert linear_resample(s, frames) is s
        assert out.frames == target and out.channels == channels
        assert np.max(np.abs(out.data[0] - s.data[0])) <= 1e-12
        if target > 1:
            assert np.max(np.abs(out.data[-1] - s.data[-1])) <= 1e-12
        assert np.all(out.data >= s.data.min(axis=0) - 1e-12)
        assert np.all(out.data <= s.data.max(axis=0) + 1e-12)

        value = float(np.float32(rng.normal(scale=100.0)))
        constant = FeatureStream("v1", np.full((frames, channels), value))
        assert np.max(np.abs(linear_resample(constant, target).data - value)) <= 1e-12


def test_stream_holds_float32():
    s = FeatureStream("v1", [[0.1, 1 / 3]])
    assert s.data.dtype == np.float32
    assert s.data.tolist() == [[float(np.float32(0.1)), float(np.float32(1 / 3))]]


def test_resample_rounds_inside_source_pair():
    s = FeatureStream("v1", np.array([[0.0], [1.0]]))
    out = linear_resample(s, 4)
    assert out.data.dtype == np.float32
    assert out.data[1, 0] == np.float32(1 / 3)
    assert out.data[2, 0] == np.float32(2 / 3)
