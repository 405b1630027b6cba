"""
Unit tests for correlation and KDE-overlap feature screening.
"""
import numpy as np
import pytest

from src.errors import ShapeError, ValidationError
from src.ingest.dataset import FeatureVector, Sample
from src.selection.feature_select import (
    apply_mask,
    correlation_matrix,
    kde_overlap,
    mask_spans,
    pearson,
    select_features,
    silverman_bandwidth,
    write_kde_curves,
)
from src.utils.rng import RngStream


N = 20


def screening_matrix():
    """
    Columns: 0 label-correlated, 1 identical per class, 2 constant,
    3 uncorrelated but with separated class densities.
    """
    y = np.repeat([0, 1], N)
    shared = np.linspace(-1.0, 1.0, N)
    X = np.zeros((2 * N, 4))
    X[:, 0] = y * 2.0 + 0.1 * np.tile(shared, 2)
    X[:, 1] = np.tile(shared, 2)
    X[:, 2] = 5.0
    X[:N, 3] = np.tile([-3.0, 3.0], N // 2)
    X[N:, 3] = np.tile([-0.1, 0.1], N // 2)
    return X, y


@pytest.mark.unit
def test_pearson():
    """Test perfect, anti and constant correlations."""
    x = np.arange(10.0)
    r, constant = pearson(x, 2 * x + 1)
    assert r == pytest.approx(1.0) and not constant
    assert pearson(x, -x)[0] == pytest.approx(-1.0)
    assert pearson(np.ones(10), x) == (0.0, True)
    with pytest.raises(ShapeError):
        pearson(x, x[:5])
    with pytest.raises(ValidationError):
        pearson([1.0], [1.0])


@pytest.mark.unit
def test_pearson_affine_invariance():
    """Test r is unchanged by positive affine maps and flips sign under negation."""
    rng = RngStream(21)
    for _ in range(50):
        x, y = rng.normal(30), rng.normal(30)
        a, b = float(rng.uniform(0.1, 10.0)[0]), float(rng.uniform(-5.0, 5.0)[0])
        r = pearson(x, y)[0]
        assert abs(pearson(a * x + b, y)[0] - r) < 1e-12
        assert abs(pearson(-x, y)[0] + r) < 1e-12


@pytest.mark.unit
def test_silverman_bandwidth():
    """Test the rule of thumb and its floor."""
    assert silverman_bandwidth(np.full(10, 3.0)) == 1e-6
    values = np.linspace(0.0, 1.0, 32)
    sigma = values.std(ddof=1)
    iqr = (np.percentile(values, 75) - np.percentile(values, 25)) / 1.34
    assert silverman_bandwidth(values) == pytest.approx(0.9 * min(sigma, iqr) * 32 ** -0.2)


@pytest.mark.unit
def test_kde_overlap_bounds():
    """Test identical classes overlap almost fully and distant ones barely."""
    a = np.linspace(-1.0, 1.0, 30)
    assert kde_overlap(a, a) > 0.99
    assert kde_overlap(a, a + 100.0) < 0.01
    with pytest.raises(ValidationError):
        kde_overlap([1.0], a)


@pytest.mark.unit
def test_drop_requires_both_criteria():
    """Test only features that are uncorrelated and overlapping get dropped."""
    X, y = screening_matrix()
    mask = select_features(X, y)
    assert list(mask.keep) == [True, False, False, True]
    assert mask.n_kept == 2
    assert abs(mask.pearson_r[3]) < 0.05
    assert mask.kde_overlap[3] < 0.95
    assert list(mask.constant) == [False, False, True, False]


@pytest.mark.unit
def test_span_restriction():
    """Test columns outside the screened spans are always kept."""
    X, y = screening_matrix()
    spans = {"audio": (0, 2), "visual": (2, 4)}
    mask = select_features(X, y, spans=spans, span_names=["visual"])
    assert list(mask.keep) == [True, True, False, True]


@pytest.mark.unit
def test_reselection_drops_nothing_new():
    """Test screening the already-masked columns keeps every one of them."""
    X, y = screening_matrix()
    spans = {"audio": (0, 2), "visual": (2, 4)}
    first = select_features(X, y, spans=spans, span_names=["audio", "visual"])
    second = select_features(X[:, first.keep], y, spans=mask_spans(spans, first.keep),
                             span_names=["audio", "visual"])
    assert second.keep.all()

    noisy = np.column_stack([X, RngStream(22).normal((2 * N, 6))])
    first = select_features(noisy, y, r_thresh=0.2, overlap_thresh=0.5)
    assert select_features(noisy[:, first.keep], y, r_thresh=0.2, overlap_thresh=0.5).keep.all()


@pytest.mark.unit
def test_selection_errors():
    """Test one-class labels and mismatched shapes."""
    X, y = screening_matrix()
    with pytest.raises(ValidationError):
        select_features(X, np.zeros_like(y))
    with pytest.raises(ShapeError):
        select_features(X, y[:-1])


@pytest.mark.unit
def test_apply_mask_recomputes_spans():
    """Test dropped columns shrink their spans."""
    spans = {"audio": (0, 2), "visual": (2, 3), "annotation": (3, 5)}
    keep = np.array([True, False, True, False, True])
    assert mask_spans(spans, keep) == {"audio": (0, 1), "visual": (1, 2), "annotation": (2, 3)}
    samples = [Sample("a", 0, FeatureVector(np.arange(5.0), spans))]
    masked = apply_mask(samples, keep)
    assert np.array_equal(masked[0].features.values, [0.0, 2.0, 4.0])
    assert masked[0].features.spans["annotation"] == (2, 3)


@pytest.mark.unit
def test_mask_csv(tmp_path):
    """Test the statistics CSV header and row count."""
    X, y = screening_matrix()
    path = select_features(X, y).write_csv(tmp_path / "selection.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "feature,pearson_r,kde_overlap,kept"
    assert len(lines) == 5


@pytest.mark.unit
def test_correlation_matrix():
    """Test the heatmap matrix is symmetric with a label column."""
    X, y = screening_matrix()
    frame = correlation_matrix(X, y)
    assert list(frame.columns) == ["f0", "f1", "f2", "f3", "label"]
    m = frame.to_numpy()
    assert np.allclose(m, m.T)
    assert np.allclose(np.diag(m), 1.0)
    assert m[0, 4] > 0.9
    assert m[2, 4] == 0.0


@pytest.mark.unit
def test_kde_curve_file(tmp_path):
    """Test KDE plot data columns."""
    path = write_kde_curves(np.linspace(0, 1, 10), np.linspace(0.5, 1.5, 10), tmp_path / "kde.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,truthful,deceptive"
    assert len(lines) == 513
