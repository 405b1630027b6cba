"""
CART decision trees with Gini splits and a bagged random forest.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.config.pipeline import ForestHyper
from src.errors import ShapeError, ValidationError
from src.models.base import Classifier
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)

LEAF = -1


def gini(counts) -> float:
    """Gini impurity 1 - sum(p_i^2) of class counts."""
    counts = np.asarray(counts, dtype=np.float64)
    if np.any(counts < 0):
        raise ValidationError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise ValidationError("gini of an empty node is undefined")
    p = counts / total
    return float(1.0 - np.dot(p, p))


@dataclass
class DecisionTree:
    """
    Binary tree in flat arrays; node 0 is the root.

    Leaves have feature == -1. Rows with x[feature] <= threshold go left.
    """
    feature: List[int] = field(default_factory=list)
    threshold: List[float] = field(default_factory=list)
    left: List[int] = field(default_factory=list)
    right: List[int] = field(default_factory=list)
    counts: List[Tuple[int, int]] = field(default_factory=list)

    def add_node(self, counts: Tuple[int, int]) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.counts.append(counts)
        return len(self.feature) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        depths = {0: 0}
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return max(depths.values())

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        """Leaf reached by every row of X."""
        X = np.atleast_2d(X)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = feature[node] != LEAF
        rows = np.arange(X.shape[0])
        while np.any(active):
            r = rows[active]
            n = node[r]
            go_left = X[r, feature[n]] <= threshold[n]
            node[r] = np.where(go_left, left[n], right[n])
            active = feature[node] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf majority label; ties go to label 0."""
        counts = np.asarray(self.counts)[self.leaf_index(X)]
        return (counts[:, 1] > counts[:, 0]).astype(np.int64)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feature": list(self.feature),
            "threshold": list(self.threshold),
            "left": list(self.left),
            "right": list(self.right),
            "counts": [list(c) for c in self.counts],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DecisionTree":
        return cls(
            feature=[int(v) for v in data["feature"]],
            threshold=[float(v) for v in data["threshold"]],
            left=[int(v) for v in data["left"]],
            right=[int(v) for v in data["right"]],
            counts=[(int(a), int(b)) for a, b in data["counts"]],
        )


def resolve_mtry(hyper: ForestHyper, d: int) -> int:
    mtry = hyper.mtry if hyper.mtry is not None else int(np.floor(np.sqrt(d)))
    return int(min(max(mtry, 1), d))


def best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int) -> Optional[Tuple[int, float]]:
    """
    Lowest weighted Gini split over the candidate features.

    Thresholds are midpoints between consecutive distinct values. Ties keep
    the first candidate: lowest feature index, then lowest threshold.

    Returns:
        (feature, threshold), or None when no split leaves min_leaf rows per side
    """
    n = y.size
    total1 = y.sum()
    n_left = np.arange(1, n)
    n_right = n - n_left
    best = None
    best_score = np.inf

    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        left1 = np.cumsum(y[order])[:-1]
        right1 = total1 - left1
        valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not np.any(valid):
            continue
        p_left = left1 / n_left
        p_right = right1 / n_right
        gini_left = 2.0 * p_left * (1.0 - p_left)
        gini_right = 2.0 * p_right * (1.0 - p_right)
        score = np.where(valid, (n_left * gini_left + n_right * gini_right) / n, np.inf)
        i = int(np.argmin(score))
        if score[i] < best_score:
            best_score = score[i]
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:
                thr = xs[i]
            best = (int(j), float(thr))
    return best


def fit_tree(X, y, hyper: ForestHyper = None, rng: Optional[RngStream] = None) -> DecisionTree:
    """
    Grow a CART tree depth-first.

    Each split draws mtry candidate features from `rng`. A node becomes a
    leaf when it is pure, at max_depth, or has no split leaving min_leaf
    rows on both sides.
    """
    hyper = hyper or ForestHyper()
    rng = rng if rng is not None else RngStream(0)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    mtry = resolve_mtry(hyper, d)

    tree = DecisionTree()
    stack = [(tree.add_node((int(n - y.sum()), int(y.sum()))), np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        ys = y[rows]
        ones = int(ys.sum())
        if depth >= hyper.max_depth or ones == 0 or ones == rows.size or rows.size < 2 * hyper.min_leaf:
            continue
        features = np.sort(rng.choice(d, mtry))
        split = best_split(X[rows], ys, features, hyper.min_leaf)
        if split is None:
            continue
        feature, thr = split
        go_left = X[rows, feature] <= thr
        left_rows, right_rows = rows[go_left], rows[~go_left]

        tree.feature[node] = feature
        tree.threshold[node] = thr
        tree.left[node] = tree.add_node((int(left_rows.size - y[left_rows].sum()), int(y[left_rows].sum())))
        tree.right[node] = tree.add_node((int(right_rows.size - y[right_rows].sum()), int(y[right_rows].sum())))
        # right pushed first so the left subtree is grown first
        stack.append((tree.right[node], right_rows, depth + 1))
        stack.append((tree.left[node], left_rows, depth + 1))
    return tree


@dataclass
class RandomForest:
    trees: List[DecisionTree]
    bootstrap_rows: List[Optional[np.ndarray]]
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def rf_fit(X, y, hyper: ForestHyper = None, rng: Optional[RngStream] = None, threads: int = 1) -> RandomForest:
    """
    Bagged forest; tree i trains on its own child stream rng.spawn(i).

    The result is identical for any thread count.
    """
    hyper = hyper or ForestHyper()
    rng = rng if rng is not None else RngStream(0)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"X of shape {X.shape} does not match {y.size} labels")
    for label in (0, 1):
        if np.sum(y == label) < 2:
            raise ValidationError(f"random forest needs at least 2 samples of label {label}")
    n = y.size

    def grow(index: int):
        child = rng.spawn(index)
        rows = child.integers(n, n) if hyper.bootstrap else None
        Xb, yb = (X[rows], y[rows]) if rows is not None else (X, y)
        return fit_tree(Xb, yb, hyper, child), rows

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            grown = list(pool.map(grow, range(hyper.n_trees)))
    else:
        grown = [grow(i) for i in range(hyper.n_trees)]

    return RandomForest(
        trees=[tree for tree, _ in grown],
        bootstrap_rows=[rows for _, rows in grown],
        seed=rng.seed,
    )


def rf_votes(forest: RandomForest, X) -> np.ndarray:
    """Number of trees voting label 1 for each row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.sum([tree.predict(X) for tree in forest.trees], axis=0)


def rf_predict(forest: RandomForest, x) -> Tuple[int, float]:
    """
    Majority vote for one vector.

    Returns:
        (label, fraction of trees voting for that label); an exact tie gives label 0
    """
    votes = int(rf_votes(forest, x)[0])
    label = 1 if votes > forest.n_trees / 2 else 0
    agreeing = votes if label == 1 else forest.n_trees - votes
    return label, agreeing / forest.n_trees


class RandomForestClassifier(Classifier):
    """Random forest on raw (unscaled) features; p is the class-1 vote fraction."""

    family = "random_forest"

    def __init__(self, hyper: ForestHyper, threads: int = 1):
        super().__init__(hyper, threads)
        self.forest: Optional[RandomForest] = None

    @staticmethod
    def default_hyper() -> ForestHyper:
        return ForestHyper()

    def _fit(self, X, y, rng, validation, unlabeled) -> None:
        self.forest = rf_fit(X, y, self.hyper, rng, threads=self.threads)
        logger.debug(f"random_forest: {self.forest.n_trees} trees, "
                     f"mean {np.mean([t.n_nodes for t in self.forest.trees]):.1f} nodes")

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        return rf_votes(self.forest, X) / self.forest.n_trees

    def params_to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.forest.seed,
            "trees": [tree.to_dict() for tree in self.forest.trees],
        }

    def params_from_dict(self, data: Dict[str, Any]) -> None:
        trees = [DecisionTree.from_dict(t) for t in data["trees"]]
        self.forest = RandomForest(trees=trees, bootstrap_rows=[None] * len(trees), seed=int(data["seed"]))
