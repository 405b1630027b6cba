"""
Unit tests for the sample graph, spectral filtering and the GCN.
"""
import numpy as np
import pytest

from src.config.pipeline import GcnHyper
from src.errors import ConfigError, ContractError, ValidationError
from src.models.base import create_model
from src.models.gcn import (
    build_graph,
    export_edges,
    gcn_forward,
    gcn_loss_and_grads,
    gcn_train,
    graph_from_adjacency,
    init_gcn,
    spectral_filter,
)
from src.utils.linalg import bce
from src.utils.rng import RngStream
from tests.mocks import blobs


@pytest.mark.unit
def test_path_graph_spectrum():
    """Test the normalized Laplacian spectrum of a 3-node path."""
    A = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    graph = graph_from_adjacency(A)
    assert np.allclose(graph.eigenvalues, [0.0, 1.0, 2.0], atol=1e-10)
    assert np.array_equal(graph.degree, [1.0, 2.0, 1.0])
    assert np.allclose(graph.eigenvectors.T @ graph.eigenvectors, np.eye(3), atol=1e-10)


@pytest.mark.unit
def test_isolated_node_and_invalid_adjacency():
    """Test isolated nodes keep an identity row and bad matrices are refused."""
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1.0
    graph = graph_from_adjacency(A)
    assert np.array_equal(graph.laplacian[2], [0.0, 0.0, 1.0])
    with pytest.raises(ValidationError):
        graph_from_adjacency(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValidationError):
        graph_from_adjacency(np.array([[0.0, -1.0], [-1.0, 0.0]]))


@pytest.mark.unit
def test_cosine_knn_graph():
    """Test nearest neighbours by cosine and symmetric weights."""
    X = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]])
    graph = build_graph(X, k=1)
    A = graph.adjacency
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 0.0)
    assert A[0, 1] > 0.9 and A[2, 3] > 0.9
    assert A[0, 2] == 0.0 and A[1, 3] == 0.0
    assert np.count_nonzero(build_graph(X, k=10).adjacency) == 10


@pytest.mark.unit
def test_zero_norm_row_named():
    """Test a zero vector is reported by id."""
    with pytest.raises(ValidationError, match="s002"):
        build_graph(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), ids=["s000", "s001", "s002"])


@pytest.mark.unit
def test_spectral_filter():
    """Test the full filter is the identity and widths are range-checked."""
    graph = build_graph(RngStream(2).normal((6, 3)), k=2)
    H = RngStream(3).normal((6, 2))
    assert np.allclose(spectral_filter(graph, H, 6), H, atol=1e-9)
    F = graph.filter_matrix(3)
    assert np.allclose(F @ F, F, atol=1e-9)
    with pytest.raises(ConfigError):
        graph.filter_matrix(7)


@pytest.mark.unit
def test_gcn_gradients():
    """Test analytic gradients against central differences."""
    X = RngStream(4).normal((8, 3))
    y = np.array([0, 1, 0, 1, 1, 0, 1, 0], dtype=np.float64)
    mask = np.array([True] * 6 + [False] * 2)
    graph = build_graph(X, k=3)
    F = graph.filter_matrix(5)
    model = init_gcn(3, GcnHyper(hidden=4), 5, RngStream(5))
    _, g1, g2 = gcn_loss_and_grads(model, F, X, y, mask)

    h = 1e-6
    for theta, grad in ((model.theta1, g1), (model.theta2, g2)):
        for j in range(theta.size):
            original = theta.flat[j]
            theta.flat[j] = original + h
            up = gcn_loss_and_grads(model, F, X, y, mask)[0]
            theta.flat[j] = original - h
            down = gcn_loss_and_grads(model, F, X, y, mask)[0]
            theta.flat[j] = original
            assert grad.flat[j] == pytest.approx((up - down) / (2 * h), rel=1e-4, abs=1e-7)


@pytest.mark.unit
def test_train_masks():
    """Test mask validation and best-epoch bookkeeping."""
    X, y = blobs(6, 3, seed=7)
    graph = build_graph(X, k=3)
    with pytest.raises(ContractError):
        gcn_train(graph, X, y, np.arange(6), np.arange(4, 8), GcnHyper(epochs=2))
    with pytest.raises(ValidationError):
        gcn_train(graph, X, y, np.zeros(12, dtype=bool), hyper=GcnHyper(epochs=2))
    model = gcn_train(graph, X, y, np.arange(8), np.arange(8, 12), GcnHyper(epochs=30), RngStream(1))
    best = model.history["best_epoch"]
    assert 0 <= best < 30
    assert model.history["val_loss"][best] == min(model.history["val_loss"])


@pytest.mark.unit
def test_transductive_classifier(rng):
    """Test scoring of fit-time nodes and refusal of unseen rows."""
    X, y = blobs(15, 4, separation=6.0, seed=8)
    train_idx, test_idx = np.arange(0, 30, 2), np.arange(1, 30, 2)
    clf = create_model("gcn", GcnHyper(k_neighbors=4, filter_width=8))
    clf.fit(X[train_idx], y[train_idx], rng, unlabeled=X[test_idx])
    proba = clf.predict_proba(X[test_idx])
    assert np.mean((proba > 0.5) == y[test_idx]) >= 0.9
    assert clf.predict_proba(X[train_idx]).shape == (15,)
    with pytest.raises(ContractError):
        clf.predict_proba(X[test_idx] + 1.0)


@pytest.mark.unit
def test_export_edges(tmp_path):
    """Test the upper-triangle edge list."""
    A = np.array([[0.0, 0.5, 0.0], [0.5, 0.0, 1.0], [0.0, 1.0, 0.0]])
    path = export_edges(graph_from_adjacency(A), tmp_path / "edges.csv", ids=["a", "b", "c"])
    assert path.read_text(encoding="utf-8").splitlines() == ["src,dst,weight", "a,b,0.5", "b,c,1.0"]


@pytest.mark.unit
def test_loss_matches_masked_bce():
    """Test the reported loss is the BCE over masked nodes only."""
    X = RngStream(9).normal((6, 2))
    y = np.array([0, 1, 0, 1, 0, 1], dtype=np.float64)
    mask = np.array([True, True, True, False, False, False])
    graph = build_graph(X, k=2)
    model = init_gcn(2, GcnHyper(hidden=3), 4, RngStream(0))
    F = graph.filter_matrix(4)
    loss, _, _ = gcn_loss_and_grads(model, F, X, y, mask)
    p = gcn_forward(model, graph, X)
    assert loss == pytest.approx(bce(y[mask], p[mask]))


def _pick(rng, low, high):
    return low + int(rng.integers(high - low + 1)[0])


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(5))
def test_gcn_gradients_on_random_models(seed):
    """Test analytic gradients of random graphs, widths and masks against central differences."""
    rng = RngStream(300 + seed)
    n, d, hidden = _pick(rng, 6, 12), _pick(rng, 2, 4), _pick(rng, 2, 5)
    m = _pick(rng, 2, n)
    X = rng.normal((n, d))
    y = (rng.random(n) < 0.5).astype(float)
    mask = rng.random(n) < 0.6
    mask[0] = True
    F = build_graph(X, k=_pick(rng, 1, 4)).filter_matrix(m)
    model = init_gcn(d, GcnHyper(hidden=hidden), m, rng.spawn(1))
    _, g1, g2 = gcn_loss_and_grads(model, F, X, y, mask)

    h = 1e-6
    for theta, grad in ((model.theta1, g1), (model.theta2, g2)):
        for j in range(theta.size):
            original = theta.flat[j]
            theta.flat[j] = original + h
            up = gcn_loss_and_grads(model, F, X, y, mask)[0]
            theta.flat[j] = original - h
            down = gcn_loss_and_grads(model, F, X, y, mask)[0]
            theta.flat[j] = original
            assert grad.flat[j] == pytest.approx((up - down) / (2 * h), rel=1e-4, abs=1e-7)


@pytest.mark.unit
def test_laplacian_spectrum_bounds_on_random_graphs():
    """Test normalized Laplacian eigenvalues lie in [0, 2] for 100 kNN graphs."""
    rng = RngStream(13)
    for _ in range(100):
        n = _pick(rng, 3, 20)
        graph = build_graph(rng.normal((n, _pick(rng, 2, 6))), k=_pick(rng, 1, 6))
        assert graph.eigenvalues.min() >= -1e-9
        assert graph.eigenvalues.max() <= 2.0 + 1e-8


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(5))
def test_forward_is_permutation_equivariant(seed):
    """Test relabelling the nodes permutes the outputs the same way."""
    rng = RngStream(400 + seed)
    weights = rng.uniform(0.1, 1.0, (5, 5))
    A = np.triu(weights, 1) + np.triu(weights, 1).T
    X = rng.normal((5, 3))
    model = init_gcn(3, GcnHyper(hidden=4), 3, rng.spawn(1))
    order = rng.permutation(5)
    direct = gcn_forward(model, graph_from_adjacency(A), X)
    relabelled = gcn_forward(model, graph_from_adjacency(A[order][:, order]), X[order])
    assert np.allclose(relabelled, direct[order], atol=1e-8)


@pytest.mark.unit
def test_single_mode_filter_on_regular_graph_is_constant():
    """Test the lowest mode of a cycle averages every node to the same output."""
    n = 6
    A = np.zeros((n, n))
    for i in range(n):
        A[i, (i + 1) % n] = A[(i + 1) % n, i] = 1.0
    X = RngStream(14).normal((n, 3))
    model = init_gcn(3, GcnHyper(hidden=4), 1, RngStream(15))
    p = gcn_forward(model, graph_from_adjacency(A), X)
    assert np.allclose(p, p[0], atol=1e-10)


@pytest.mark.unit
def test_planted_partition_recovered():
    """Test two weakly bridged cliques are separated from four labels per clique."""
    size = 10
    n = 2 * size
    A = np.zeros((n, n))
    A[:size, :size] = 1.0
    A[size:, size:] = 1.0
    np.fill_diagonal(A, 0.0)
    A[size - 1, size] = A[size, size - 1] = 0.1
    y = np.array([1.0] * size + [0.0] * size)
    X = 0.3 * RngStream(16).normal((n, 3))
    X[:, 0] += np.where(y == 1.0, 2.0, -2.0)
    train_mask = np.zeros(n, dtype=bool)
    train_mask[:4] = True
    train_mask[size:size + 4] = True

    graph = graph_from_adjacency(A)
    model = gcn_train(graph, X, y, train_mask, hyper=GcnHyper(filter_width=2, hidden=8, lr=0.1, epochs=300),
                      rng=RngStream(17))
    p = gcn_forward(model, graph, X)
    assert np.mean((p[~train_mask] > 0.5) == y[~train_mask]) >= 0.9
