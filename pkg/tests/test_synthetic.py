"""
Unit tests for the synthetic dataset and corpus generators.
"""
import numpy as np
import pytest

from src.ingest.manifest import load_manifest
from src.ingest.synthetic import make_synthetic_dataset, signal_positions


@pytest.mark.unit
def test_default_dataset_shape(synthetic_samples):
    """Test 120 balanced samples of 161 features with the fused spans."""
    assert len(synthetic_samples) == 120
    assert sum(s.label for s in synthetic_samples) == 60
    assert all(len(s.features) == 161 for s in synthetic_samples)
    assert synthetic_samples[0].features.spans == {"audio": (0, 61), "visual": (61, 122), "annotation": (122, 161)}
    flags = np.vstack([s.features.span("annotation") for s in synthetic_samples])
    assert set(np.unique(flags)) <= {0.0, 1.0}


@pytest.mark.unit
def test_signal_positions():
    """Test signal dims split between the audio and visual blocks."""
    pos = signal_positions(20, 60, 60)
    assert pos.size == 20 == np.unique(pos).size
    assert np.sum(pos < 60) == 10
    assert np.all((pos < 60) | ((pos >= 61) & (pos < 121)))
    with pytest.raises(ValueError):
        signal_positions(200, 60, 60)


@pytest.mark.unit
def test_signal_dims_separate_classes():
    """Test class means differ by about the separation on signal dims only."""
    samples = make_synthetic_dataset(n_per_class=200, seed=1)
    X = np.vstack([s.features.values for s in samples])
    y = np.array([s.label for s in samples])
    gap = X[y == 1].mean(axis=0) - X[y == 0].mean(axis=0)
    pos = signal_positions(20, 60, 60)
    assert np.all(np.abs(gap[pos] - 4.0) < 0.5)
    noise = np.setdiff1d(np.arange(122), pos)
    assert np.max(np.abs(gap[noise])) < 0.5


@pytest.mark.unit
def test_dataset_is_seeded():
    """Test the same seed gives identical data and another seed differs."""
    a = make_synthetic_dataset(n_per_class=5, seed=3)
    b = make_synthetic_dataset(n_per_class=5, seed=3)
    c = make_synthetic_dataset(n_per_class=5, seed=4)
    assert all(np.array_equal(x.features.values, z.features.values) for x, z in zip(a, b))
    assert not np.array_equal(a[0].features.values, c[0].features.values)


@pytest.mark.integration
def test_corpus_manifest(corpus):
    """Test the written corpus validates as a manifest."""
    manifest = load_manifest(corpus)
    assert len(manifest) == 12
    assert manifest.label_counts() == {"truthful": 6, "deceptive": 6}
    assert all(e.modalities == ["audio", "visual", "annotation"] for e in manifest.entries)
