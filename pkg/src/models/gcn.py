"""
Spectral graph convolutional classifier over a sample-similarity graph.

Nodes are samples and edges join cosine k-nearest neighbours. Node features
are filtered by projection onto the m lowest-frequency eigenvectors of the
normalized Laplacian:

    H1 = relu(F X T1),  p = sigmoid(F H1 T2),  F = U_m U_m^T

Training is transductive: every node is scored, the loss covers only the
training mask.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.config.pipeline import GcnHyper
from src.errors import ConfigError, ContractError, DivergenceError, ShapeError, ValidationError
from src.models.base import Classifier
from src.models.preprocessing import Standardizer
from src.utils.linalg import as_matrix, bce, sigmoid, sym_eig
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphSpec:
    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def filter_matrix(self, m: int) -> np.ndarray:
        """Projector U_m U_m^T onto the m smoothest eigenvectors."""
        if m > self.n or m < 1:
            raise ConfigError(f"filter width {m} must lie in [1, {self.n}]")
        U = self.eigenvectors[:, :m]
        return U @ U.T


def graph_from_adjacency(A) -> GraphSpec:
    """
    Normalized Laplacian L = I - D^-1/2 A D^-1/2 and its eigenpairs.

    Isolated nodes get D^-1/2 = 0, so their Laplacian row is the identity row.
    """
    A = as_matrix(A, "adjacency")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ShapeError(f"adjacency must be square, got {A.shape}")
    if np.any(A < 0):
        raise ValidationError("adjacency weights must be non-negative")
    if np.max(np.abs(A - A.T)) > 1e-12:
        raise ValidationError("adjacency must be symmetric")
    degree = A.sum(axis=1)
    inv_sqrt = np.zeros(n)
    connected = degree > 0
    inv_sqrt[connected] = 1.0 / np.sqrt(degree[connected])
    laplacian = np.eye(n) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    laplacian = 0.5 * (laplacian + laplacian.T)
    eigenvalues, eigenvectors = sym_eig(laplacian)
    return GraphSpec(A, degree, laplacian, eigenvalues, eigenvectors)


def build_graph(X, k: int = 8, ids: Optional[Sequence[str]] = None) -> GraphSpec:
    """
    Cosine k-nearest-neighbour graph over the rows of X.

    Edge i->j exists when j is among i's k most similar rows (ties to the
    lower index). Weights are max(cos, 0) and the graph is symmetrized by
    taking the larger direction.

    Raises:
        ValidationError: If a row has zero norm (named by id when given)
    """
    X = as_matrix(X, "node features")
    n = X.shape[0]
    if n < 2:
        raise ValidationError("a graph needs at least 2 nodes")
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        name = ids[zero[0]] if ids is not None else f"row {zero[0]}"
        raise ValidationError(f"zero-norm feature vector for {name}; cosine similarity undefined")

    unit = X / norms[:, None]
    similarity = np.clip(unit @ unit.T, -1.0, 1.0)
    k = min(k, n - 1)
    A = np.zeros((n, n))
    for i in range(n):
        candidates = np.argsort(-np.delete(similarity[i], i), kind="stable")[:k]
        neighbours = np.where(candidates >= i, candidates + 1, candidates)
        A[i, neighbours] = np.maximum(similarity[i, neighbours], 0.0)
    A = np.maximum(A, A.T)
    np.fill_diagonal(A, 0.0)
    graph = graph_from_adjacency(A)
    logger.debug(f"Graph: {n} nodes, {int(np.count_nonzero(np.triu(A)))} edges, "
                 f"lambda in [{graph.eigenvalues[0]:.3g}, {graph.eigenvalues[-1]:.3g}]")
    return graph


def spectral_filter(graph: GraphSpec, H, m: int) -> np.ndarray:
    """Project the columns of H onto the m smoothest Laplacian eigenvectors."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[0] != graph.n:
        raise ShapeError(f"{H.shape[0]} feature rows for {graph.n} nodes")
    return graph.filter_matrix(m) @ H


def export_edges(graph: GraphSpec, path: Union[str, Path], ids: Optional[Sequence[str]] = None) -> Path:
    """Upper-triangle edges as CSV `src,dst,weight`."""
    src, dst = np.nonzero(np.triu(graph.adjacency, 1))
    names = list(ids) if ids is not None else [str(i) for i in range(graph.n)]
    frame = pd.DataFrame({
        "src": [names[i] for i in src],
        "dst": [names[j] for j in dst],
        "weight": graph.adjacency[src, dst],
    })
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


@dataclass
class GcnModel:
    m: int
    theta1: np.ndarray      # (d, h)
    theta2: np.ndarray      # (h, 1)
    seed: int = 0
    history: Dict[str, list] = field(default_factory=dict)


def init_gcn(d: int, hyper: GcnHyper, m: int, rng: RngStream) -> GcnModel:
    lim1 = np.sqrt(6.0 / (d + hyper.hidden))
    lim2 = np.sqrt(6.0 / (hyper.hidden + 1))
    return GcnModel(
        m=m,
        theta1=rng.uniform(-lim1, lim1, (d, hyper.hidden)),
        theta2=rng.uniform(-lim2, lim2, (hyper.hidden, 1)),
        seed=rng.seed,
    )


def gcn_forward(model: GcnModel, graph: GraphSpec, X, F: Optional[np.ndarray] = None) -> np.ndarray:
    """Probability for every node."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (graph.n, model.theta1.shape[0]):
        raise ShapeError(f"node features {X.shape} do not match {graph.n} nodes x {model.theta1.shape[0]} features")
    F = graph.filter_matrix(model.m) if F is None else F
    H1 = np.maximum(F @ X @ model.theta1, 0.0)
    return sigmoid(F @ H1 @ model.theta2).reshape(-1)


def gcn_loss_and_grads(model: GcnModel, F: np.ndarray, X: np.ndarray, y: np.ndarray,
                       mask: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Mean BCE over masked nodes and its gradients with respect to T1 and T2."""
    FX = F @ X
    Z1 = FX @ model.theta1
    H1 = np.maximum(Z1, 0.0)
    FH1 = F @ H1
    p = sigmoid(FH1 @ model.theta2).reshape(-1)

    count = mask.sum()
    loss = bce(y[mask], p[mask])
    dZ2 = (np.where(mask, p - y, 0.0) / count)[:, None]
    d_theta2 = FH1.T @ dZ2
    dH1 = F @ (dZ2 @ model.theta2.T)
    d_theta1 = FX.T @ (dH1 * (Z1 > 0.0))
    return loss, d_theta1, d_theta2


def _as_mask(mask, n: int, name: str) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype != bool:
        index = mask.astype(np.int64)
        mask = np.zeros(n, dtype=bool)
        mask[index] = True
    if mask.size != n:
        raise ShapeError(f"{name} mask has {mask.size} entries for {n} nodes")
    return mask


def gcn_train(
    graph: GraphSpec,
    X,
    y,
    train_mask,
    val_mask=None,
    hyper: GcnHyper = None,
    rng: Optional[RngStream] = None,
) -> GcnModel:
    """
    Full-batch gradient descent; the parameters with the best validation loss win.

    Raises:
        ContractError: If the masks overlap
        DivergenceError: If the loss becomes non-finite
    """
    hyper = hyper or GcnHyper()
    rng = rng if rng is not None else RngStream(0)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = graph.n
    train_mask = _as_mask(train_mask, n, "train")
    val_mask = _as_mask(val_mask, n, "val") if val_mask is not None else np.zeros(n, dtype=bool)
    if not train_mask.any():
        raise ValidationError("train mask is empty")
    if np.any(train_mask & val_mask):
        raise ContractError("train and validation masks overlap")

    m = min(hyper.filter_width, n)
    F = graph.filter_matrix(m)
    model = init_gcn(X.shape[1], hyper, m, rng)
    monitor = val_mask if val_mask.any() else train_mask
    best = (np.inf, model.theta1.copy(), model.theta2.copy(), -1)
    train_curve, val_curve = [], []

    with np.errstate(over="raise", invalid="raise"):
        for epoch in range(hyper.epochs):
            try:
                loss, g1, g2 = gcn_loss_and_grads(model, F, X, y, train_mask)
                p = gcn_forward(model, graph, X, F)
            except FloatingPointError as e:
                raise DivergenceError(epoch, hyper.lr, str(e)) from e
            if not np.isfinite(loss):
                raise DivergenceError(epoch, hyper.lr)
            monitored = bce(y[monitor], p[monitor])
            train_curve.append(loss)
            val_curve.append(monitored if val_mask.any() else None)
            if monitored < best[0]:
                best = (monitored, model.theta1.copy(), model.theta2.copy(), epoch)
            model.theta1 = model.theta1 - hyper.lr * g1
            model.theta2 = model.theta2 - hyper.lr * g2
            if epoch % 50 == 0:
                logger.debug(f"gcn epoch {epoch}: train {loss:.5f}, monitored {monitored:.5f}")

    if best[3] >= 0:
        model.theta1, model.theta2 = best[1], best[2]
    model.history = {"train_loss": train_curve, "val_loss": val_curve, "best_epoch": best[3]}
    return model


class GcnClassifier(Classifier):
    """
    Transductive wrapper: fit() receives the rows to be scored later as
    `unlabeled`, and predict_proba() only answers for rows that were graph
    nodes during fit.
    """

    family = "gcn"
    needs_validation = True
    transductive = True

    def __init__(self, hyper: GcnHyper, threads: int = 1):
        super().__init__(hyper, threads)
        self.scaler = Standardizer()
        self.model: Optional[GcnModel] = None
        self.node_scores: Dict[bytes, float] = {}

    @staticmethod
    def default_hyper() -> GcnHyper:
        return GcnHyper()

    @staticmethod
    def _key(row: np.ndarray) -> bytes:
        return np.ascontiguousarray(row, dtype=np.float64).tobytes()

    def _fit(self, X, y, rng, validation, unlabeled) -> None:
        blocks = [X]
        labels = [y]
        n_val = 0
        if validation is not None and len(validation[1]) > 0:
            blocks.append(np.asarray(validation[0], dtype=np.float64))
            labels.append(np.asarray(validation[1]))
            n_val = len(validation[1])
        if unlabeled is not None and len(unlabeled) > 0:
            blocks.append(np.asarray(unlabeled, dtype=np.float64))
            labels.append(np.zeros(len(unlabeled), dtype=np.int64))
        nodes = np.vstack(blocks)
        node_labels = np.concatenate(labels)

        self.scaler.fit(X)
        features = self.scaler.transform(nodes)
        graph = build_graph(features, self.hyper.k_neighbors)
        n_train = X.shape[0]
        train_mask = np.zeros(nodes.shape[0], dtype=bool)
        train_mask[:n_train] = True
        val_mask = np.zeros(nodes.shape[0], dtype=bool)
        val_mask[n_train:n_train + n_val] = True

        self.model = gcn_train(graph, features, node_labels, train_mask, val_mask, self.hyper, rng)
        self.history = dict(self.model.history)
        scores = gcn_forward(self.model, graph, features)
        self.node_scores = {}
        for row, score in zip(nodes, scores):
            self.node_scores.setdefault(self._key(row), float(score))

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            key = self._key(row)
            if key not in self.node_scores:
                raise ContractError("gcn scores only rows that were graph nodes at fit time")
            out[i] = self.node_scores[key]
        return out

    def params_to_dict(self) -> Dict[str, Any]:
        rows = [np.frombuffer(key, dtype=np.float64).tolist() for key in self.node_scores]
        return {
            "scaler": self.scaler.to_dict(),
            "m": self.model.m,
            "seed": self.model.seed,
            "theta1": self.model.theta1.tolist(),
            "theta2": self.model.theta2.tolist(),
            "nodes": rows,
            "scores": list(self.node_scores.values()),
        }

    def params_from_dict(self, data: Dict[str, Any]) -> None:
        self.scaler = Standardizer.from_dict(data["scaler"])
        self.model = GcnModel(
            m=int(data["m"]),
            theta1=np.array(data["theta1"], dtype=np.float64),
            theta2=np.array(data["theta2"], dtype=np.float64),
            seed=int(data["seed"]),
        )
        self.node_scores = {
            self._key(np.array(row, dtype=np.float64)): float(score)
            for row, score in zip(data["nodes"], data["scores"])
        }
