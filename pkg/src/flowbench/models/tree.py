"""Binary decision trees stored as flat node arrays.

Internal nodes route left when ``feature <= threshold``.  Classification
leaves hold a (benign, malicious) frequency pair; gradient leaves hold a
single score.  Split ties are broken toward the lowest feature index, then
the lowest threshold, so growth is reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray  # int32, LEAF at leaves
    threshold: np.ndarray  # float64, nan at leaves
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # (n_nodes, width)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature == LEAF).sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id for every row."""
        node = np.zeros(len(X), dtype=np.int32)
        while True:
            feat = self.feature[node]
            internal = feat != LEAF
            if not internal.any():
                return node
            rows = np.nonzero(internal)[0]
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [None if np.isnan(t) else float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        return cls(
            feature=np.asarray(doc["feature"], dtype=np.int32),
            threshold=np.asarray(
                [np.nan if t is None else t for t in doc["threshold"]], dtype=np.float64
            ),
            left=np.asarray(doc["left"], dtype=np.int32),
            right=np.asarray(doc["right"], dtype=np.int32),
            value=np.asarray(doc["value"], dtype=np.float64),
        )


class TreeBuilder:
    """Accumulates nodes during growth, then freezes them into a Tree."""

    def __init__(self, value_width: int):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[tuple[float, ...]] = []
        self.width = value_width

    def add_leaf(self, value) -> int:
        node = len(self.feature)
        self.feature.append(LEAF)
        self.threshold.append(np.nan)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(tuple(np.atleast_1d(value)))
        return node

    def add_internal(self, feature: int, threshold: float) -> int:
        node = len(self.feature)
        self.feature.append(int(feature))
        self.threshold.append(float(threshold))
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append((0.0,) * self.width)
        return node

    def set_children(self, node: int, left: int, right: int) -> None:
        self.left[node] = left
        self.right[node] = right

    def build(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64).reshape(-1, self.width),
        )


def gini_impurity(class_counts) -> float:
    """1 - sum of squared class proportions for a (benign, malicious) count pair."""
    c0, c1 = class_counts
    if c0 < 0 or c1 < 0:
        raise ValueError("class counts must be non-negative")
    total = c0 + c1
    if total == 0:
        raise ValueError("class counts must not both be zero")
    p0 = c0 / total
    p1 = c1 / total
    return 1.0 - (p0 * p0 + p1 * p1)


def _best_gini_split(
    features: np.ndarray,
    labels: np.ndarray,
    idx: np.ndarray,
    candidates: np.ndarray,
    min_samples_leaf: int,
):
    """Scan candidate features for the split with the largest Gini decrease.

    Returns (feature, threshold, decrease) or None.  Candidates are scanned
    in ascending index order and thresholds in ascending value order;
    strict improvement comparisons make the lowest (feature, threshold)
    win ties.
    """
    n = len(idx)
    y = labels[idx]
    c1 = int(y.sum())
    parent = gini_impurity((n - c1, c1))
    best = None
    best_dec = 0.0
    for f in candidates:
        col = features[idx, f]
        order = np.argsort(col, kind="stable")
        v = col[order]
        cum1 = np.cumsum(y[order])
        boundary = np.nonzero(v[:-1] < v[1:])[0]
        if boundary.size == 0:
            continue
        n_left = boundary + 1
        ok = (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
        if not ok.any():
            continue
        n_left = n_left[ok]
        boundary = boundary[ok]
        c1_left = cum1[boundary]
        c0_left = n_left - c1_left
        n_right = n - n_left
        c1_right = c1 - c1_left
        c0_right = n_right - c1_right
        gini_left = 1.0 - (c0_left**2 + c1_left**2) / (n_left.astype(np.float64) ** 2)
        gini_right = 1.0 - (c0_right**2 + c1_right**2) / (n_right.astype(np.float64) ** 2)
        decrease = parent - (n_left * gini_left + n_right * gini_right) / n
        pos = int(np.argmax(decrease))
        if decrease[pos] > best_dec:
            best_dec = float(decrease[pos])
            b = boundary[pos]
            best = (int(f), float((v[b] + v[b + 1]) / 2.0), best_dec)
    return best


def fit_cart(train, row_indices, hp, rng: np.random.Generator) -> Tree:
    """Grow a classification tree with the Gini criterion.

    At every node a fresh uniform subset of ``hp.max_features`` features is
    drawn from ``rng``; growth stops at max_depth, min_samples_leaf, or a
    pure node.  Leaves store (benign, malicious) frequencies.
    """
    row_indices = np.asarray(row_indices, dtype=np.int64)
    if row_indices.size == 0:
        raise DataError("fit_cart needs at least one row")
    features = train.features
    labels = train.labels
    n_features = features.shape[1]
    k = min(hp.max_features, n_features)
    builder = TreeBuilder(value_width=2)

    def leaf(idx: np.ndarray) -> int:
        n = len(idx)
        c1 = int(labels[idx].sum())
        return builder.add_leaf(((n - c1) / n, c1 / n))

    def grow(idx: np.ndarray, depth: int) -> int:
        n = len(idx)
        c1 = int(labels[idx].sum())
        if depth >= hp.max_depth or n < 2 * hp.min_samples_leaf or c1 == 0 or c1 == n:
            return leaf(idx)
        if k < n_features:
            candidates = np.sort(rng.permutation(n_features)[:k])
        else:
            candidates = np.arange(n_features)
        split = _best_gini_split(features, labels, idx, candidates, hp.min_samples_leaf)
        if split is None:
            return leaf(idx)
        f, t, _ = split
        node = builder.add_internal(f, t)
        go_left = features[idx, f] <= t
        left = grow(idx[go_left], depth + 1)
        right = grow(idx[~go_left], depth + 1)
        builder.set_children(node, left, right)
        return node

    grow(row_indices, 0)
    return builder.build()
