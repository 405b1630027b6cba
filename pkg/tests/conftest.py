"""
Test configuration and shared fixtures.
"""
import pytest

from src.ingest.synthetic import make_synthetic_dataset, write_synthetic_corpus
from src.utils.rng import RngStream
from tests.mocks import blobs, make_samples


@pytest.fixture
def rng():
    """Fresh seeded stream per test."""
    return RngStream(1234)


@pytest.fixture
def blob_samples():
    """40 well separated samples in 4 dimensions."""
    X, y = blobs(n_per_class=20, d=4, separation=6.0, seed=3)
    return make_samples(X, y)


@pytest.fixture(scope="session")
def synthetic_samples():
    """The 120-sample, 161-dimension benchmark dataset."""
    return make_synthetic_dataset()


@pytest.fixture
def small_synthetic():
    """24-sample synthetic dataset for quick pipeline runs."""
    return make_synthetic_dataset(n_per_class=12, seed=5)


@pytest.fixture
def corpus(tmp_path):
    """On-disk corpus (WAVs, visual CSV, manifest) with 6 samples per class."""
    return write_synthetic_corpus(tmp_path / "corpus", n_per_class=6, seed=11)


@pytest.fixture
def sym_matrix():
    """Random symmetric 6x6 matrix."""
    a = RngStream(99).normal((6, 6))
    return a + a.T
