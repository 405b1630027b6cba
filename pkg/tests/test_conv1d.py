"""
Unit tests for the 1D CNN: layer kernels, backpropagation and training.
"""
import numpy as np
import pytest

from src.config.pipeline import Conv1DHyper, LayerConfig
from src.errors import ConfigError, ContractError, ShapeError
from src.models.base import create_model
from src.models.conv1d import (
    MaxPool,
    build_net,
    conv1d_forward,
    dropout,
    maxpool_forward,
    train,
    write_training_curve,
)
from src.utils.linalg import bce
from src.utils.rng import RngStream
from tests.mocks import blobs

SMALL = [
    {"type": "conv", "out_ch": 2, "kernel": 3},
    {"type": "relu"},
    {"type": "maxpool", "window": 2},
    {"type": "flatten"},
    {"type": "dense", "out": 3},
    {"type": "relu"},
    {"type": "dense", "out": 1},
    {"type": "sigmoid"},
]

LINEAR = [
    {"type": "conv", "out_ch": 4, "kernel": 3},
    {"type": "relu"},
    {"type": "maxpool", "window": 2},
    {"type": "flatten"},
    {"type": "dense", "out": 1},
    {"type": "sigmoid"},
]


def naive_conv(x, W, b):
    out_ch, in_ch, k = W.shape
    length = x.shape[1] - k + 1
    Z = np.zeros((out_ch, length))
    for o in range(out_ch):
        for t in range(length):
            Z[o, t] = b[o] + sum(x[c, t + i] * W[o, c, i] for c in range(in_ch) for i in range(k))
    return Z


def naive_maxpool(x, window):
    channels, length = x.shape
    n_out = -(-length // window)
    pooled = np.zeros((channels, n_out))
    positions = np.zeros((channels, n_out), dtype=np.int64)
    for c in range(channels):
        for t in range(n_out):
            best = t * window
            for i in range(t * window, min((t + 1) * window, length)):
                if x[c, i] > x[c, best]:
                    best = i
            pooled[c, t], positions[c, t] = x[c, best], best
    return pooled, positions


def _pick(rng, low, high):
    return low + int(rng.integers(high - low + 1)[0])


def random_architecture(seed):
    """A small stack using every layer kind, drawn from a seeded stream."""
    rng = RngStream(seed)
    length = _pick(rng, 12, 20)
    input_len = length
    kernel, window = _pick(rng, 2, 4), _pick(rng, 1, 3)
    architecture = [
        {"type": "conv", "out_ch": _pick(rng, 1, 3), "kernel": kernel},
        {"type": "relu"},
        {"type": "maxpool", "window": window},
        {"type": "dropout", "rate": float(rng.uniform(0.2, 0.5)[0])},
    ]
    length = -(-(length - kernel + 1) // window)
    if rng.random()[0] < 0.5 and length >= 3:
        kernel = _pick(rng, 2, 3)
        architecture += [{"type": "conv", "out_ch": _pick(rng, 1, 3), "kernel": kernel}, {"type": "relu"}]
    architecture.append({"type": "flatten"})
    if rng.random()[0] < 0.5:
        architecture += [{"type": "dense", "out": _pick(rng, 2, 4)}, {"type": "relu"}]
    architecture += [{"type": "dense", "out": 1}, {"type": "sigmoid"}]
    return input_len, architecture


@pytest.mark.unit
def test_conv_matches_loops():
    """Test the batched convolution against explicit sums."""
    rng = RngStream(1)
    x, W, b = rng.normal((3, 12)), rng.normal((4, 3, 5)), rng.normal(4)
    assert np.allclose(conv1d_forward(x, W, b), naive_conv(x, W, b))
    assert conv1d_forward(x, W, b).shape == (4, 8)
    with pytest.raises(ShapeError):
        conv1d_forward(rng.normal((2, 12)), W, b)


@pytest.mark.unit
def test_maxpool_ties_and_remainder():
    """Test first-max ties and a short trailing window."""
    pooled, positions = maxpool_forward(np.array([[1.0, 3.0, 2.0, 2.0, 5.0]]), 2)
    assert np.array_equal(pooled, [[3.0, 2.0, 5.0]])
    assert np.array_equal(positions, [[1, 2, 4]])


@pytest.mark.unit
def test_conv_and_pool_match_oracles_on_random_cases():
    """Test convolution and pooling against loop oracles on 1000 seeded cases."""
    rng = RngStream(11)
    worst_conv = worst_pool = 0.0
    for _ in range(1000):
        in_ch, out_ch = _pick(rng, 1, 3), _pick(rng, 1, 3)
        length, kernel, window = _pick(rng, 4, 12), _pick(rng, 1, 4), _pick(rng, 1, 4)
        x, W, b = rng.normal((in_ch, length)), rng.normal((out_ch, in_ch, kernel)), rng.normal(out_ch)
        worst_conv = max(worst_conv, np.max(np.abs(conv1d_forward(x, W, b) - naive_conv(x, W, b))))
        pooled, positions = maxpool_forward(x, window)
        expected, expected_positions = naive_maxpool(x, window)
        worst_pool = max(worst_pool, np.max(np.abs(pooled - expected)))
        assert np.array_equal(positions, expected_positions)
    assert worst_conv < 1e-10
    assert worst_pool < 1e-10


@pytest.mark.unit
@pytest.mark.parametrize("window", [1, 2, 3, 5])
def test_pool_gradient_routes_to_one_position_per_window(window):
    """Test the pooling gradient has a single nonzero per window."""
    x = RngStream(window).normal((3, 2, 13))
    layer = MaxPool(window)
    pooled, cache = layer.forward(x, False, None)
    dx, _ = layer.backward(np.ones_like(pooled), cache)
    assert dx.shape == x.shape
    assert np.count_nonzero(dx) <= pooled.size
    for t in range(pooled.shape[-1]):
        block = dx[..., t * window:(t + 1) * window]
        assert np.all(np.count_nonzero(block, axis=-1) == 1)


@pytest.mark.unit
def test_dropout():
    """Test inverted scaling in training and identity at inference."""
    x = np.ones(4000)
    assert np.array_equal(dropout(x, 0.5, None, training=False), x)
    out = dropout(x, 0.5, RngStream(2), training=True)
    assert set(np.unique(out)) <= {0.0, 2.0}
    assert abs(out.mean() - 1.0) < 0.1
    with pytest.raises(ConfigError):
        dropout(x, 1.0, RngStream(2), training=True)


@pytest.mark.unit
def test_dropout_preserves_mean_across_seeds():
    """Test the inverted-dropout output averages to the input over 10^4 streams."""
    x = 1.0 + RngStream(3).random(50)
    total = np.zeros_like(x)
    for seed in range(10_000):
        total += dropout(x, 0.3, RngStream(seed), training=True)
    assert abs((total / 10_000).mean() - x.mean()) < 0.01 * x.mean()


@pytest.mark.unit
def test_default_architecture_shapes():
    """Test the default stack over 161 fused features."""
    net = build_net(161, rng=RngStream(0))
    dense = [layer for layer in net.layers if layer.kind == "dense"]
    assert dense[0].n_in == 32 * 38
    assert dense[-1].n_out == 1
    p, _ = net.forward(RngStream(1).normal((3, 161)))
    assert p.shape == (3,)
    assert np.all((p > 0.0) & (p < 1.0))


@pytest.mark.unit
@pytest.mark.parametrize("architecture", [
    [{"type": "dense", "out": 1}, {"type": "sigmoid"}],
    [{"type": "conv", "out_ch": 2, "kernel": 20}, {"type": "flatten"}, {"type": "dense", "out": 1}, {"type": "sigmoid"}],
    [{"type": "flatten"}, {"type": "dense", "out": 2}, {"type": "sigmoid"}],
    [{"type": "flatten"}, {"type": "sigmoid"}, {"type": "dense", "out": 1}],
    [{"type": "flatten"}, {"type": "conv", "out_ch": 2, "kernel": 2}, {"type": "dense", "out": 1}, {"type": "sigmoid"}],
])
def test_invalid_architectures(architecture):
    """Test broken shape chains and bad output heads."""
    with pytest.raises(ConfigError):
        build_net(10, architecture)


@pytest.mark.unit
def test_backprop_matches_finite_differences():
    """Test every parameter gradient against central differences of the BCE loss."""
    net = build_net(9, SMALL, RngStream(0))
    X = RngStream(1).normal((4, 9))
    y = np.array([0.0, 1.0, 1.0, 0.0])
    _, cache = net.forward(X)
    grads = net.backward(cache, y)

    h = 1e-6
    checked = 0
    for layer_params, layer_grads in zip(net.parameters(), grads):
        for name, value in layer_params.items():
            for j in range(value.size):
                original = value.flat[j]
                value.flat[j] = original + h
                up = bce(y, net.forward(X)[0])
                value.flat[j] = original - h
                down = bce(y, net.forward(X)[0])
                value.flat[j] = original
                numeric = (up - down) / (2 * h)
                assert layer_grads[name].flat[j] == pytest.approx(numeric, rel=1e-4, abs=1e-7)
                checked += 1
    assert checked == (2 * 3 + 2) + (8 * 3 + 3) + (3 + 1)


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(20))
def test_backprop_on_random_nets_with_dropout(seed):
    """Test gradients of random nets in training mode under a fixed dropout mask."""
    input_len, architecture = random_architecture(seed)
    net = build_net(input_len, architecture, RngStream(50 + seed))
    assert {layer.kind for layer in net.layers} == {
        "conv", "relu", "maxpool", "dropout", "flatten", "dense", "sigmoid"
    }
    X = RngStream(200 + seed).normal((3, input_len))
    y = np.array([1.0, 0.0, 1.0])

    def loss():
        return bce(y, net.forward(X, training=True, rng=RngStream(100 + seed))[0])

    _, cache = net.forward(X, training=True, rng=RngStream(100 + seed))
    grads = net.backward(cache, y)

    h = 1e-5
    for layer_params, layer_grads in zip(net.parameters(), grads):
        for name, value in layer_params.items():
            for j in range(value.size):
                original = value.flat[j]
                value.flat[j] = original + h
                up = loss()
                value.flat[j] = original - h
                down = loss()
                value.flat[j] = original
                assert layer_grads[name].flat[j] == pytest.approx((up - down) / (2 * h), rel=1e-4, abs=1e-7)


@pytest.mark.unit
def test_stale_cache_and_missing_stream():
    """Test backward after an update and dropout without a stream."""
    net = build_net(9, SMALL, RngStream(0))
    X = RngStream(1).normal((2, 9))
    _, cache = net.forward(X)
    net.apply_gradients(net.backward(cache, [0, 1]), 0.1)
    with pytest.raises(ContractError):
        net.backward(cache, [0, 1])
    with pytest.raises(ContractError):
        build_net(161, rng=RngStream(0)).forward(RngStream(1).normal((2, 161)), training=True)


@pytest.mark.unit
def test_training_is_seeded():
    """Test identical streams give identical parameters."""
    X, y = blobs(10, 12, seed=3)
    hyper = Conv1DHyper(epochs=5, batch=4)
    a, _ = train(build_net(12, LINEAR, RngStream(0)), X, y, hyper=hyper, rng=RngStream(5))
    b, _ = train(build_net(12, LINEAR, RngStream(0)), X, y, hyper=hyper, rng=RngStream(5))
    for pa, pb in zip(a.parameters(), b.parameters()):
        for name in pa:
            assert np.array_equal(pa[name], pb[name])


@pytest.mark.unit
def test_early_stopping_restores_best():
    """Test training stops on a worsening validation loss and keeps the best epoch."""
    X, y = blobs(20, 12, seed=4)
    hyper = Conv1DHyper(lr=0.1, epochs=50, batch=8, patience=3)
    net, history = train(build_net(12, LINEAR, RngStream(0)), X, y, X, 1 - y, hyper, RngStream(6))
    assert len(history.train_loss) < 50
    assert len(history.train_loss) - 1 - history.best_epoch == 3
    restored = bce(1 - y, net.predict_proba(X))
    assert restored == pytest.approx(history.val_loss[history.best_epoch])
    assert restored == pytest.approx(min(history.val_loss))


@pytest.mark.unit
def test_without_validation_monitors_training_loss(tmp_path):
    """Test the training-loss fallback and the curve file."""
    X, y = blobs(10, 12, seed=5)
    _, history = train(build_net(12, LINEAR, RngStream(0)), X, y, hyper=Conv1DHyper(epochs=4), rng=RngStream(1))
    assert history.val_loss == [None] * len(history.train_loss)
    path = write_training_curve(history, tmp_path / "curve.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == "epoch,train_loss,val_loss"


@pytest.mark.unit
def test_classifier_learns_blobs(rng):
    """Test the standardized classifier separates blobs."""
    X, y = blobs(20, 16, separation=4.0, seed=6)
    hyper = Conv1DHyper(lr=0.1, epochs=100, batch=8, patience=20,
                        architecture=[LayerConfig(**layer) for layer in LINEAR])
    clf = create_model("conv1d", hyper)
    clf.fit(X, y, rng)
    assert np.mean(clf.predict(X) == y) >= 0.9
    assert clf.training_history().best_epoch is not None
    with pytest.raises(ShapeError):
        clf.predict_proba(X[:, :8])
