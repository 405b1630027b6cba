"""
Unit tests for modality resampling and fusion.
"""
import numpy as np
import pytest

from src.errors import ConfigError, ShapeError
from src.ingest.fusion import build_samples, fuse_modalities, fused_length, load_modalities, resample_vector
from src.ingest.manifest import load_manifest


@pytest.mark.unit
def test_resample_identity_and_endpoints():
    """Test equal lengths, analytic interpolation and constant vectors."""
    v = np.array([3.0, -1.0, 2.0])
    assert np.array_equal(resample_vector(v, 3), v)
    assert np.allclose(resample_vector([0.0, 1.0], 3), [0.0, 0.5, 1.0])
    assert np.allclose(resample_vector(np.full(7, 2.5), 40), 2.5)
    out = resample_vector(np.arange(10.0), 4)
    assert out[0] == 0.0 and out[-1] == 9.0


@pytest.mark.unit
def test_resample_errors():
    """Test empty input and non-positive targets."""
    with pytest.raises(ShapeError):
        resample_vector([], 3)
    with pytest.raises(ConfigError):
        resample_vector([1.0, 2.0], 0)


@pytest.mark.unit
def test_fused_layout():
    """Test 4 + 4 lengths with 39 flags give 49 values and ordered spans."""
    flags = np.zeros(39)
    fused = fuse_modalities(np.arange(8.0), np.arange(3.0), flags, audio_len=4, visual_len=4)
    assert len(fused) == 49 == fused_length(4, 4)
    assert fused.spans == {"audio": (0, 5), "visual": (5, 10), "annotation": (10, 49)}
    assert fused.values[4] == 1.0 and fused.values[9] == 1.0
    assert np.all(fused.span("annotation") == 0.0)
    assert np.allclose(fused.values[5:9], resample_vector(np.arange(3.0), 4))


@pytest.mark.unit
def test_hand_assembled_vector():
    """Test a small fusion against a hand-built vector."""
    flags = [1] + [0] * 38
    fused = fuse_modalities([0.0, 2.0], None, flags, audio_len=3, visual_len=2)
    expected = np.array([0.0, 1.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0] + [0.0] * 38)
    assert np.array_equal(fused.values, expected)


@pytest.mark.unit
def test_absent_modalities_zero_filled():
    """Test absent audio and annotations."""
    fused = fuse_modalities(None, [1.0, 2.0], None, audio_len=5, visual_len=2)
    assert np.all(fused.span("audio") == 0.0)
    assert np.array_equal(fused.span("visual"), [1.0, 2.0, 1.0])
    assert np.all(fused.span("annotation") == 0.0)


@pytest.mark.unit
def test_fusion_errors():
    """Test bad lengths and bad flags."""
    with pytest.raises(ConfigError):
        fuse_modalities([1.0], [1.0], None, audio_len=0)
    with pytest.raises(ShapeError):
        fuse_modalities([1.0], [1.0], [0, 1])
    with pytest.raises(ShapeError):
        fuse_modalities([1.0], [1.0], [0.5] * 39)


@pytest.mark.integration
def test_build_samples_from_corpus(corpus):
    """Test WAV extraction, visual CSV lookup and fusion over a manifest."""
    manifest = load_manifest(corpus)
    parts = load_modalities(manifest.entries[0])
    assert parts["audio"].size == 60
    assert parts["visual"].size == 60
    samples = build_samples(manifest)
    assert [s.id for s in samples] == manifest.ids()
    assert all(len(s.features) == 161 for s in samples)
    assert [s.label for s in samples] == [e.label for e in manifest.entries]


@pytest.mark.integration
def test_build_samples_threads_identical(corpus):
    """Test concurrent loading keeps manifest order and values."""
    manifest = load_manifest(corpus)
    serial = build_samples(manifest, threads=1)
    parallel = build_samples(manifest, threads=4)
    for a, b in zip(serial, parallel):
        assert a.id == b.id
        assert np.array_equal(a.features.values, b.features.values)
