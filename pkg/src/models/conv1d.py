"""
1D convolutional network with hand-written forward and backward passes.

Tensors are batch-first: (m, channels, length) up to Flatten, (m, features)
after it. The last two layers are always Dense(out=1) and Sigmoid, and the
backward pass starts from dL/dZ_f = (p - y) / m, the BCE gradient taken
through the sigmoid for a batch mean.
"""
import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.config.pipeline import Conv1DHyper, LayerConfig
from src.errors import ConfigError, ContractError, DivergenceError, ShapeError
from src.models.base import Classifier
from src.models.preprocessing import Standardizer
from src.utils.linalg import bce, sigmoid
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)

PREDICT_CHUNK = 1024

DEFAULT_ARCHITECTURE = [
    LayerConfig(type="conv", out_ch=16, kernel=5),
    LayerConfig(type="relu"),
    LayerConfig(type="maxpool", window=2),
    LayerConfig(type="dropout", rate=0.3),
    LayerConfig(type="conv", out_ch=32, kernel=5),
    LayerConfig(type="relu"),
    LayerConfig(type="maxpool", window=2),
    LayerConfig(type="flatten"),
    LayerConfig(type="dense", out=64),
    LayerConfig(type="relu"),
    LayerConfig(type="dropout", rate=0.3),
    LayerConfig(type="dense", out=1),
    LayerConfig(type="sigmoid"),
]


# Single-sample operations

def conv1d_forward(x, W, b) -> np.ndarray:
    """
    Valid, stride-1 convolution of one sample.

    Args:
        x: Input of shape (in_ch, L)
        W: Kernels of shape (out_ch, in_ch, k)
        b: Biases of shape (out_ch,)

    Returns:
        Feature map of shape (out_ch, L - k + 1):
        Z[o, t] = b[o] + sum_c sum_i x[c, t + i] * W[o, c, i]
    """
    x = np.asarray(x, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if x.ndim != 2 or W.ndim != 3 or x.shape[0] != W.shape[1]:
        raise ShapeError(f"incompatible conv shapes: x {x.shape}, W {W.shape}")
    return _conv_batch(x[None], W, np.asarray(b, dtype=np.float64))[0]


def maxpool_forward(x, window: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Non-overlapping max pooling along the last axis.

    A trailing remainder is pooled as a short window. Ties pick the first
    maximal position.

    Returns:
        (pooled, argmax positions in input coordinates)
    """
    x = np.asarray(x, dtype=np.float64)
    pooled, local = _pool_batch(x[None], window)
    positions = local + np.arange(pooled.shape[-1]) * window
    return pooled[0], positions[0]


def dropout(x, rate: float, rng: Optional[RngStream], training: bool) -> np.ndarray:
    """Inverted dropout: survivors are scaled by 1 / (1 - rate); identity at inference."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    x = np.asarray(x, dtype=np.float64)
    if not training or rate == 0.0:
        return x
    mask = rng.bernoulli_mask(x.shape, 1.0 - rate)
    return x * mask / (1.0 - rate)


# Batched kernels

def _conv_batch(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = W.shape[2]
    length = x.shape[2] - k + 1
    if length < 1:
        raise ShapeError(f"input length {x.shape[2]} is shorter than kernel {k}")
    out = np.broadcast_to(b[None, :, None], (x.shape[0], W.shape[0], length)).copy()
    for i in range(k):
        out += np.einsum("oc,mcl->mol", W[:, :, i], x[:, :, i:i + length])
    return out


def _pool_batch(x: np.ndarray, window: int) -> Tuple[np.ndarray, np.ndarray]:
    if window < 1:
        raise ConfigError(f"pool window must be >= 1, got {window}")
    length = x.shape[-1]
    n_out = -(-length // window)
    padded = np.full(x.shape[:-1] + (n_out * window,), -np.inf)
    padded[..., :length] = x
    blocks = padded.reshape(x.shape[:-1] + (n_out, window))
    local = np.argmax(blocks, axis=-1)
    pooled = np.take_along_axis(blocks, local[..., None], axis=-1)[..., 0]
    return pooled, local


# Layers

class Layer:
    kind = ""
    params: Dict[str, np.ndarray]

    def __init__(self):
        self.params = {}

    def forward(self, x: np.ndarray, training: bool, rng: Optional[RngStream]) -> Tuple[np.ndarray, Any]:
        raise NotImplementedError

    def backward(self, dout: np.ndarray, cache: Any) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        raise NotImplementedError

    def config(self) -> Dict[str, Any]:
        return {"type": self.kind}


class Conv(Layer):
    kind = "conv"

    def __init__(self, in_ch: int, out_ch: int, kernel: int):
        super().__init__()
        self.in_ch, self.out_ch, self.kernel = in_ch, out_ch, kernel
        self.params = {"W": np.zeros((out_ch, in_ch, kernel)), "b": np.zeros(out_ch)}

    def forward(self, x, training, rng):
        return _conv_batch(x, self.params["W"], self.params["b"]), x

    def backward(self, dout, cache):
        x = cache
        W = self.params["W"]
        length = dout.shape[2]
        dW = np.empty_like(W)
        dx = np.zeros_like(x)
        for i in range(self.kernel):
            window = x[:, :, i:i + length]
            dW[:, :, i] = np.einsum("mol,mcl->oc", dout, window)
            dx[:, :, i:i + length] += np.einsum("oc,mol->mcl", W[:, :, i], dout)
        return dx, {"W": dW, "b": dout.sum(axis=(0, 2))}

    def config(self):
        return {"type": self.kind, "in_ch": self.in_ch, "out_ch": self.out_ch, "kernel": self.kernel}


class MaxPool(Layer):
    kind = "maxpool"

    def __init__(self, window: int):
        super().__init__()
        self.window = window

    def forward(self, x, training, rng):
        pooled, local = _pool_batch(x, self.window)
        return pooled, (x.shape, local)

    def backward(self, dout, cache):
        shape, local = cache
        n_out = local.shape[-1]
        blocks = np.zeros(shape[:-1] + (n_out, self.window))
        np.put_along_axis(blocks, local[..., None], dout[..., None], axis=-1)
        dx = blocks.reshape(shape[:-1] + (n_out * self.window,))[..., :shape[-1]]
        return np.ascontiguousarray(dx), {}

    def config(self):
        return {"type": self.kind, "window": self.window}


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate: float):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, training, rng):
        if not training or self.rate == 0.0:
            return x, None
        scale = rng.bernoulli_mask(x.shape, 1.0 - self.rate) / (1.0 - self.rate)
        return x * scale, scale

    def backward(self, dout, cache):
        return (dout if cache is None else dout * cache), {}

    def config(self):
        return {"type": self.kind, "rate": self.rate}


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in: int, n_out: int):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.params = {"W": np.zeros((n_out, n_in)), "b": np.zeros(n_out)}

    def forward(self, x, training, rng):
        return x @ self.params["W"].T + self.params["b"], x

    def backward(self, dout, cache):
        x = cache
        return dout @ self.params["W"], {"W": dout.T @ x, "b": dout.sum(axis=0)}

    def config(self):
        return {"type": self.kind, "in": self.n_in, "out": self.n_out}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, training, rng):
        return np.maximum(x, 0.0), x > 0.0

    def backward(self, dout, cache):
        return dout * cache, {}


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x, training, rng):
        p = sigmoid(x)
        return p, p

    def backward(self, dout, cache):
        return dout * cache * (1.0 - cache), {}


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, training, rng):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache):
        return dout.reshape(cache), {}


# Network

@dataclass
class ForwardCache:
    version: int
    layer_caches: List[Any]
    p: np.ndarray


GradientSet = List[Dict[str, np.ndarray]]


class Conv1DNet:
    """Ordered layer stack ending in Dense(out=1) -> Sigmoid."""

    def __init__(self, layers: List[Layer], input_len: int, in_ch: int = 1):
        self.layers = layers
        self.input_len = input_len
        self.in_ch = in_ch
        self.version = 0

    def parameters(self) -> List[Dict[str, np.ndarray]]:
        return [layer.params for layer in self.layers]

    def get_state(self) -> List[Dict[str, np.ndarray]]:
        return copy.deepcopy(self.parameters())

    def set_state(self, state: List[Dict[str, np.ndarray]]) -> None:
        for layer, params in zip(self.layers, state):
            layer.params = {name: value.copy() for name, value in params.items()}
        self.version += 1

    def apply_gradients(self, grads: GradientSet, lr: float) -> None:
        """Plain SGD step."""
        for layer, layer_grads in zip(self.layers, grads):
            for name, grad in layer_grads.items():
                layer.params[name] -= lr * grad
        self.version += 1

    def architecture(self) -> List[Dict[str, Any]]:
        return [layer.config() for layer in self.layers]

    def shape_input(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim == 2:
            X = X[:, None, :]
        if X.shape[1:] != (self.in_ch, self.input_len):
            raise ShapeError(f"expected input ({self.in_ch}, {self.input_len}), got {X.shape[1:]}")
        return X

    def forward(self, X, training: bool = False, rng: Optional[RngStream] = None) -> Tuple[np.ndarray, ForwardCache]:
        return net_forward(self, X, training, rng)

    def backward(self, cache: ForwardCache, y) -> GradientSet:
        return net_backward(self, cache, y)

    def predict_proba(self, X) -> np.ndarray:
        X = self.shape_input(X)
        out = [net_forward(self, X[s:s + PREDICT_CHUNK])[0] for s in range(0, X.shape[0], PREDICT_CHUNK)]
        return np.concatenate(out) if out else np.zeros(0)


def net_forward(net: Conv1DNet, X, training: bool = False, rng: Optional[RngStream] = None) -> Tuple[np.ndarray, ForwardCache]:
    """
    Layer-by-layer forward pass.

    Returns:
        (p of shape (m,), cache of every layer's input-side state)
    """
    if training and rng is None and any(isinstance(l, Dropout) and l.rate > 0 for l in net.layers):
        raise ContractError("training-mode dropout needs a random stream")
    h = net.shape_input(X)
    caches = []
    for layer in net.layers:
        h, layer_cache = layer.forward(h, training, rng)
        caches.append(layer_cache)
    p = h.reshape(-1)
    return p, ForwardCache(version=net.version, layer_caches=caches, p=p)


def net_backward(net: Conv1DNet, cache: ForwardCache, y) -> GradientSet:
    """
    Gradients of mean BCE for the batch cached by net_forward.

    Raises:
        ContractError: If parameters changed since the forward pass
    """
    if cache.version != net.version:
        raise ContractError(f"stale forward cache (version {cache.version}, net at {net.version})")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != cache.p.size:
        raise ShapeError(f"{y.size} labels for a batch of {cache.p.size}")

    m = y.size
    grads: GradientSet = [{} for _ in net.layers]
    dout = ((cache.p - y) / m)[:, None]
    # the final sigmoid is folded into the starting gradient
    for index in range(len(net.layers) - 2, -1, -1):
        dout, grads[index] = net.layers[index].backward(dout, cache.layer_caches[index])
    return grads


def _glorot(rng: RngStream, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def build_net(input_len: int, architecture: Optional[Sequence[LayerConfig]] = None,
              rng: Optional[RngStream] = None, in_ch: int = 1) -> Conv1DNet:
    """
    Build and initialize a network, inferring channel and width fields.

    Raises:
        ConfigError: If the shape chain breaks or the stack does not end in
            Dense(out=1) -> Sigmoid
    """
    architecture = list(architecture) if architecture else DEFAULT_ARCHITECTURE
    rng = rng if rng is not None else RngStream(0)
    layers: List[Layer] = []
    channels, length = in_ch, input_len
    flat: Optional[int] = None

    for position, spec in enumerate(architecture):
        spec = spec if isinstance(spec, LayerConfig) else LayerConfig(**spec)
        where = f"layer {position} ({spec.type})"
        if spec.type == "conv":
            if flat is not None:
                raise ConfigError(f"{where}: convolution after flatten")
            if spec.out_ch is None or spec.kernel is None:
                raise ConfigError(f"{where}: needs out_ch and kernel")
            if spec.kernel > length:
                raise ConfigError(f"{where}: kernel {spec.kernel} exceeds input length {length}")
            layer = Conv(channels, spec.out_ch, spec.kernel)
            fan_in, fan_out = channels * spec.kernel, spec.out_ch * spec.kernel
            layer.params["W"] = _glorot(rng, layer.params["W"].shape, fan_in, fan_out)
            channels, length = spec.out_ch, length - spec.kernel + 1
        elif spec.type == "maxpool":
            if flat is not None:
                raise ConfigError(f"{where}: pooling after flatten")
            if spec.window is None:
                raise ConfigError(f"{where}: needs window")
            layer = MaxPool(spec.window)
            length = -(-length // spec.window)
        elif spec.type == "dropout":
            layer = Dropout(spec.rate if spec.rate is not None else 0.0)
        elif spec.type == "relu":
            layer = ReLU()
        elif spec.type == "sigmoid":
            if position != len(architecture) - 1:
                raise ConfigError(f"{where}: sigmoid is only allowed as the output layer")
            layer = Sigmoid()
        elif spec.type == "flatten":
            if flat is not None:
                raise ConfigError(f"{where}: input is already flat")
            layer = Flatten()
            flat = channels * length
        elif spec.type == "dense":
            if flat is None:
                raise ConfigError(f"{where}: dense layers need a flatten first")
            if spec.out is None:
                raise ConfigError(f"{where}: needs out")
            layer = Dense(flat, spec.out)
            layer.params["W"] = _glorot(rng, layer.params["W"].shape, flat, spec.out)
            flat = spec.out
        else:
            raise ConfigError(f"{where}: unknown layer type")
        layers.append(layer)

    if len(layers) < 2 or not isinstance(layers[-1], Sigmoid) or not isinstance(layers[-2], Dense) \
            or layers[-2].n_out != 1:
        raise ConfigError("architecture must end with dense(out=1) followed by sigmoid")
    return Conv1DNet(layers, input_len=input_len, in_ch=in_ch)


def net_from_architecture(config: List[Dict[str, Any]], input_len: int, in_ch: int = 1) -> Conv1DNet:
    """Rebuild a net from its architecture() description (zero parameters)."""
    layers: List[Layer] = []
    for spec in config:
        kind = spec["type"]
        if kind == "conv":
            layers.append(Conv(spec["in_ch"], spec["out_ch"], spec["kernel"]))
        elif kind == "maxpool":
            layers.append(MaxPool(spec["window"]))
        elif kind == "dropout":
            layers.append(Dropout(spec["rate"]))
        elif kind == "dense":
            layers.append(Dense(spec["in"], spec["out"]))
        elif kind == "relu":
            layers.append(ReLU())
        elif kind == "sigmoid":
            layers.append(Sigmoid())
        elif kind == "flatten":
            layers.append(Flatten())
        else:
            raise ConfigError(f"unknown layer type {kind!r}")
    return Conv1DNet(layers, input_len=input_len, in_ch=in_ch)


@dataclass
class TrainingHistory:
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[Optional[float]] = field(default_factory=list)
    best_epoch: Optional[int] = None


def train(
    net: Conv1DNet,
    X_train,
    y_train,
    X_val=None,
    y_val=None,
    hyper: Conv1DHyper = None,
    rng: Optional[RngStream] = None,
) -> Tuple[Conv1DNet, TrainingHistory]:
    """
    Mini-batch SGD with per-epoch shuffling and early stopping.

    Training stops once the validation loss (training loss when there is no
    validation set) fails to improve for `patience` epochs; the best
    parameters are restored.

    Raises:
        DivergenceError: If a loss becomes non-finite
    """
    hyper = hyper or Conv1DHyper()
    rng = rng if rng is not None else RngStream(0)
    X_train = net.shape_input(X_train)
    y_train = np.asarray(y_train, dtype=np.float64)
    if X_train.shape[0] == 0:
        raise ShapeError("training set is empty")
    has_val = X_val is not None and len(X_val) > 0
    if has_val:
        X_val = net.shape_input(X_val)
        y_val = np.asarray(y_val, dtype=np.float64)

    history = TrainingHistory()
    best_loss = np.inf
    best_state = None
    stale = 0
    n = X_train.shape[0]

    for epoch in range(hyper.epochs):
        try:
            with np.errstate(over="raise", invalid="raise"):
                order = rng.permutation(n)
                for start in range(0, n, hyper.batch):
                    rows = order[start:start + hyper.batch]
                    p, cache = net_forward(net, X_train[rows], training=True, rng=rng)
                    net.apply_gradients(net_backward(net, cache, y_train[rows]), hyper.lr)

                train_loss = bce(y_train, net.predict_proba(X_train))
                val_loss = bce(y_val, net.predict_proba(X_val)) if has_val else None
        except FloatingPointError as e:
            raise DivergenceError(epoch, hyper.lr, str(e)) from e
        if not (np.isfinite(train_loss) and all(np.all(np.isfinite(v)) for v in _flat_params(net))):
            raise DivergenceError(epoch, hyper.lr)
        monitored = val_loss if has_val else train_loss
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        logger.debug(f"conv1d epoch {epoch}: train {train_loss:.5f}" + (f", val {val_loss:.5f}" if has_val else ""))

        if monitored < best_loss:
            best_loss = monitored
            best_state = net.get_state()
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= hyper.patience:
                logger.info(f"conv1d early stop at epoch {epoch}; best epoch {history.best_epoch}")
                break

    if best_state is not None:
        net.set_state(best_state)
    return net, history


def _flat_params(net: Conv1DNet) -> List[np.ndarray]:
    return [value for params in net.parameters() for value in params.values()]


def write_training_curve(history: TrainingHistory, path: Union[str, Path]) -> Path:
    """Per-epoch losses as CSV `epoch,train_loss,val_loss`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        "epoch": np.arange(len(history.train_loss)),
        "train_loss": history.train_loss,
        "val_loss": [np.nan if v is None else v for v in history.val_loss],
    })
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


class Conv1DClassifier(Classifier):
    """Standardized input, one channel, early stopping on a validation carve-out."""

    family = "conv1d"
    needs_validation = True

    def __init__(self, hyper: Conv1DHyper, threads: int = 1):
        super().__init__(hyper, threads)
        self.scaler = Standardizer()
        self.net: Optional[Conv1DNet] = None

    @staticmethod
    def default_hyper() -> Conv1DHyper:
        return Conv1DHyper()

    def _fit(self, X, y, rng, validation, unlabeled) -> None:
        Xs = self.scaler.fit_transform(X)
        self.net = build_net(X.shape[1], self.hyper.architecture, rng.spawn(0))
        X_val, y_val = (None, None)
        if validation is not None and len(validation[1]) > 0:
            X_val, y_val = self.scaler.transform(validation[0]), validation[1]
        self.net, curve = train(self.net, Xs, y, X_val, y_val, self.hyper, rng.spawn(1))
        self.history = {"train_loss": curve.train_loss, "val_loss": curve.val_loss,
                        "best_epoch": curve.best_epoch}

    def training_history(self) -> TrainingHistory:
        return TrainingHistory(
            train_loss=list(self.history.get("train_loss", [])),
            val_loss=list(self.history.get("val_loss", [])),
            best_epoch=self.history.get("best_epoch"),
        )

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        return self.net.predict_proba(self.scaler.transform(X))

    def params_to_dict(self) -> Dict[str, Any]:
        return {
            "scaler": self.scaler.to_dict(),
            "input_len": self.net.input_len,
            "architecture": self.net.architecture(),
            "params": [{name: value.tolist() for name, value in p.items()} for p in self.net.parameters()],
        }

    def params_from_dict(self, data: Dict[str, Any]) -> None:
        self.scaler = Standardizer.from_dict(data["scaler"])
        self.net = net_from_architecture(data["architecture"], int(data["input_len"]))
        self.net.set_state([
            {name: np.array(value, dtype=np.float64) for name, value in p.items()}
            for p in data["params"]
        ])
        self.n_features = self.net.input_len
