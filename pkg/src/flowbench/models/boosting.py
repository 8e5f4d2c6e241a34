"""Histogram gradient-tree boosting with level-wise and leaf-wise growth.

Split gain is 0.5 * (GL^2/(HL+1) + GR^2/(HR+1) - G^2/(H+1)); a split is
accepted only when the gain strictly exceeds the configured minimum loss
reduction and both children satisfy the leaf constraints.  Leaf values are
-G/(H+1).  Histograms use a padded (feature, bin) layout so a whole node is
scanned with a handful of array operations, and the larger child's
histogram is obtained by subtracting the smaller child's from the parent's.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..rng import stream
from .base import (
    LAMBDA_L2,
    LEAF_BOOST_GOSS,
    LEVEL_BOOST,
    LeafBoostParams,
    LevelBoostParams,
    TrainedModel,
    base_log_odds,
    make_metadata,
)
from .binning import BinIndex, build_bins
from .tree import TreeBuilder

DEFAULT_MAX_BINS = 256


def logistic_grad_hess(logit, label):
    """Gradient and hessian of the cross-entropy loss at a logit:
    g = p - y, h = p * (1 - p) with p = sigmoid(logit)."""
    z = np.asarray(logit, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    p = sigmoid(z)
    return p - y, p * (1.0 - p)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mean_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _ceil_fraction(fraction: float, n: int) -> int:
    x = fraction * n
    r = round(x)
    return r if abs(x - r) < 1e-9 else math.ceil(x)


def goss_sample(grad: np.ndarray, top_fraction: float, other_fraction: float, rng: np.random.Generator):
    """Gradient-based one-side sampling.

    Keeps the ceil(a*N) largest-|gradient| rows at weight 1 and a uniform
    ceil(b*N) of the rest at weight (1-a)/b.  Returns (sorted row indices,
    aligned weights).
    """
    grad = np.asarray(grad, dtype=np.float64)
    n = len(grad)
    a, b = top_fraction, other_fraction
    if not 0.0 < a <= 1.0:
        raise ValueError("top_fraction must be in (0, 1]")
    if not 0.0 <= b <= 1.0 - a + 1e-12:
        raise ValueError("other_fraction must be in [0, 1 - top_fraction]")
    top_n = max(1, _ceil_fraction(a, n))
    order = np.argsort(-np.abs(grad), kind="stable")
    top = order[:top_n]
    rest = order[top_n:]
    rand_n = min(_ceil_fraction(b, n), len(rest))
    weight = np.zeros(n, dtype=np.float64)
    weight[top] = 1.0
    if rand_n > 0:
        picked = rest[rng.choice(len(rest), size=rand_n, replace=False)]
        weight[picked] = (1.0 - a) / b
        idx = np.sort(np.concatenate([top, picked]))
    else:
        idx = np.sort(top)
    return idx, weight[idx]


@dataclass
class _NodeState:
    pos: np.ndarray  # positions into the fitted row subset
    hist: tuple | None  # (pad_g, pad_h, pad_c), padded (k, B) layout
    g_sum: float
    h_sum: float
    depth: int


class _Grower:
    """Shared machinery for one gradient tree over binned features."""

    def __init__(
        self,
        grad: np.ndarray,
        hess: np.ndarray,
        bins: BinIndex,
        candidates: np.ndarray,
        rows: np.ndarray,
        weight: np.ndarray | None,
        min_leaf_weight: float,
        min_samples_leaf: int,
        min_loss_reduction: float,
    ):
        self.cand = candidates
        self.k = len(candidates)
        self.B = int(bins.n_bins[candidates].max())
        self.edges = [bins.edges[f] for f in candidates]
        self.codes = bins.codes[np.ix_(rows, candidates)]
        self.flat = self.codes + (np.arange(self.k, dtype=np.int32) * self.B)[None, :]
        w = np.ones(len(rows)) if weight is None else np.asarray(weight, dtype=np.float64)
        self.gw = grad[rows] * w
        self.hw = hess[rows] * w
        self.min_leaf_weight = min_leaf_weight
        self.min_samples_leaf = min_samples_leaf
        self.min_loss_reduction = min_loss_reduction
        # split positions must not point past a feature's last real bin
        n_bins = bins.n_bins[candidates]
        self.valid = np.arange(self.B - 1)[None, :] < (n_bins[:, None] - 1)
        self.builder = TreeBuilder(value_width=1)
        self.values = np.zeros(len(rows), dtype=np.float64)

    def histogram(self, pos: np.ndarray) -> tuple:
        flat = self.flat[pos].ravel()
        size = self.k * self.B
        pad_g = np.bincount(flat, weights=np.repeat(self.gw[pos], self.k), minlength=size)
        pad_h = np.bincount(flat, weights=np.repeat(self.hw[pos], self.k), minlength=size)
        pad_c = np.bincount(flat, minlength=size)
        return (
            pad_g.reshape(self.k, self.B),
            pad_h.reshape(self.k, self.B),
            pad_c.reshape(self.k, self.B),
        )

    def root(self) -> _NodeState:
        pos = np.arange(len(self.gw))
        return _NodeState(
            pos, self.histogram(pos), float(self.gw.sum()), float(self.hw.sum()), 0
        )

    def best_split(self, st: _NodeState):
        """(feature_rank, bin, gain, child sums) of the best admissible split."""
        pad_g, pad_h, pad_c = st.hist
        gc = np.cumsum(pad_g, axis=1)
        hc = np.cumsum(pad_h, axis=1)
        cc = np.cumsum(pad_c, axis=1)
        gl, hl, cl = gc[:, :-1], hc[:, :-1], cc[:, :-1]
        gr = gc[:, -1:] - gl
        hr = hc[:, -1:] - hl
        cr = cc[:, -1:] - cl
        ok = self.valid & (cl >= max(1, self.min_samples_leaf)) & (cr >= max(1, self.min_samples_leaf))
        if self.min_leaf_weight > 0:
            ok = ok & (hl >= self.min_leaf_weight) & (hr >= self.min_leaf_weight)
        parent = (st.g_sum * st.g_sum) / (st.h_sum + LAMBDA_L2)
        gain = 0.5 * (gl * gl / (hl + LAMBDA_L2) + gr * gr / (hr + LAMBDA_L2) - parent)
        gain = np.where(ok, gain, -np.inf)
        flat_pos = int(np.argmax(gain))
        best = float(gain.flat[flat_pos])
        if not best > self.min_loss_reduction:
            return None
        fr, b = divmod(flat_pos, self.B - 1)
        return fr, b, best, (float(gl[fr, b]), float(hl[fr, b]), float(gr[fr, b]), float(hr[fr, b]))

    def split(self, st: _NodeState, fr: int, b: int, child_sums, with_hists: bool):
        gl, hl, gr, hr = child_sums
        col = self.codes[st.pos, fr]
        go_left = col <= b
        pos_l = st.pos[go_left]
        pos_r = st.pos[~go_left]
        hist_l = hist_r = None
        if with_hists:
            pad_g, pad_h, pad_c = st.hist
            if len(pos_l) <= len(pos_r):
                hist_l = self.histogram(pos_l)
                hist_r = (pad_g - hist_l[0], pad_h - hist_l[1], pad_c - hist_l[2])
            else:
                hist_r = self.histogram(pos_r)
                hist_l = (pad_g - hist_r[0], pad_h - hist_r[1], pad_c - hist_r[2])
        st.hist = None
        left = _NodeState(pos_l, hist_l, gl, hl, st.depth + 1)
        right = _NodeState(pos_r, hist_r, gr, hr, st.depth + 1)
        return left, right

    def make_leaf(self, st: _NodeState) -> int:
        value = -st.g_sum / (st.h_sum + LAMBDA_L2)
        self.values[st.pos] = value
        return self.builder.add_leaf(value)

    def threshold_of(self, fr: int, b: int) -> float:
        return float(self.edges[fr][b])


def _grow_level_wise(grower: _Grower, max_depth: int) -> int:
    def grow(st: _NodeState) -> int:
        if st.depth >= max_depth:
            return grower.make_leaf(st)
        found = grower.best_split(st)
        if found is None:
            return grower.make_leaf(st)
        fr, b, _, sums = found
        node = grower.builder.add_internal(grower.cand[fr], grower.threshold_of(fr, b))
        left_st, right_st = grower.split(st, fr, b, sums, with_hists=st.depth + 1 < max_depth)
        left = grow(left_st)
        right = grow(right_st)
        grower.builder.set_children(node, left, right)
        return node

    return grow(grower.root())


def _grow_leaf_wise(grower: _Grower, max_leaves: int) -> int:
    @dataclass
    class _Pending:
        state: _NodeState
        split: tuple | None = None
        left: "_Pending | None" = None
        right: "_Pending | None" = None

    root = _Pending(grower.root())
    heap: list = []
    counter = 0

    def consider(p: _Pending):
        nonlocal counter
        found = grower.best_split(p.state)
        if found is not None:
            heapq.heappush(heap, (-found[2], counter, p, found))
            counter += 1

    consider(root)
    n_leaves = 1
    while heap and n_leaves < max_leaves:
        _, _, p, found = heapq.heappop(heap)
        fr, b, _, sums = found
        left_st, right_st = grower.split(p.state, fr, b, sums, with_hists=True)
        p.split = (fr, b)
        p.left = _Pending(left_st)
        p.right = _Pending(right_st)
        n_leaves += 1
        consider(p.left)
        consider(p.right)

    def emit(p: _Pending) -> int:
        if p.split is None:
            return grower.make_leaf(p.state)
        fr, b = p.split
        node = grower.builder.add_internal(grower.cand[fr], grower.threshold_of(fr, b))
        left = emit(p.left)
        right = emit(p.right)
        grower.builder.set_children(node, left, right)
        return node

    return emit(root)


def subsample_size(fraction: float, n_features: int) -> int:
    return max(1, int(math.floor(fraction * n_features + 0.5)))


def fit_gradient_tree(
    grad: np.ndarray,
    hess: np.ndarray,
    bins: BinIndex,
    *,
    mode: str,
    rng: np.random.Generator | None = None,
    max_depth: int = 0,
    max_leaves: int = 0,
    min_leaf_weight: float = 0.0,
    min_samples_leaf: int = 1,
    min_loss_reduction: float = 0.0,
    feature_subsample: float = 1.0,
    sample_indices: np.ndarray | None = None,
    sample_weight: np.ndarray | None = None,
    candidate_features: np.ndarray | None = None,
):
    """Fit one gradient tree; returns (tree, per-fitted-row leaf values).

    ``mode`` is "level" (expand every frontier node up to max_depth) or
    "leaf" (repeatedly expand the frontier leaf with the largest gain until
    max_leaves).  The per-tree candidate-feature set is drawn from ``rng``
    when ``feature_subsample`` < 1 and not given explicitly.  GOSS-style
    row subsets enter through ``sample_indices``/``sample_weight``; weights
    scale the gradients and hessians while leaf-size checks use raw counts.
    """
    grad = np.asarray(grad, dtype=np.float64)
    hess = np.asarray(hess, dtype=np.float64)
    if grad.shape != hess.shape:
        raise DataError("grad and hess must have equal length")
    if hess.size and hess.min() < 0:
        raise DataError("hessians must be non-negative")
    n_features = bins.n_features
    if candidate_features is not None:
        cand = np.sort(np.asarray(candidate_features, dtype=np.int64))
    else:
        k = subsample_size(feature_subsample, n_features)
        if k < n_features:
            if rng is None:
                raise DataError("feature_subsample < 1 requires an rng")
            cand = np.sort(rng.permutation(n_features)[:k])
        else:
            cand = np.arange(n_features, dtype=np.int64)
    rows = (
        np.arange(len(grad), dtype=np.int64)
        if sample_indices is None
        else np.asarray(sample_indices, dtype=np.int64)
    )
    if rows.size == 0:
        raise DataError("cannot fit a tree on zero rows")
    grower = _Grower(
        grad,
        hess,
        bins,
        cand,
        rows,
        sample_weight,
        min_leaf_weight,
        min_samples_leaf,
        min_loss_reduction,
    )
    if mode == "level":
        _grow_level_wise(grower, max_depth)
    elif mode == "leaf":
        _grow_leaf_wise(grower, max_leaves)
    else:
        raise DataError(f"unknown growth mode {mode!r}")
    return grower.builder.build(), grower.values


def train_level_boost(train, hp: LevelBoostParams, seed: int) -> TrainedModel:
    """100 rounds of level-wise gradient trees on the cross-entropy loss."""
    train.require_both_classes("train_level_boost")
    X = train.features
    y = train.labels.astype(np.float64)
    bins = build_bins(X, DEFAULT_MAX_BINS)
    base = base_log_odds(train.labels)
    scores = np.full(len(y), base, dtype=np.float64)
    trees = []
    losses = [mean_cross_entropy(scores, y)]
    for r in range(hp.n_estimators):
        g, h = logistic_grad_hess(scores, y)
        tree, vals = fit_gradient_tree(
            g,
            h,
            bins,
            mode="level",
            rng=stream(seed, "tree", r),
            max_depth=hp.max_depth,
            min_leaf_weight=hp.min_leaf_weight,
            min_loss_reduction=hp.min_loss_reduction,
            feature_subsample=hp.feature_subsample,
        )
        scores += hp.learning_rate * vals
        trees.append(tree)
        losses.append(mean_cross_entropy(scores, y))
    return TrainedModel(
        kind=LEVEL_BOOST,
        params=hp,
        base_score=base,
        feature_names=train.schema.feature_names,
        trees=trees,
        metadata=make_metadata(seed, train.provenance, "regular", training_loss=losses),
    )


def train_leaf_boost_goss(train, hp: LeafBoostParams, seed: int) -> TrainedModel:
    """100 rounds of leaf-wise gradient trees with per-round GOSS row sampling."""
    train.require_both_classes("train_leaf_boost_goss")
    X = train.features
    y = train.labels.astype(np.float64)
    bins = build_bins(X, DEFAULT_MAX_BINS)
    base = base_log_odds(train.labels)
    scores = np.full(len(y), base, dtype=np.float64)
    trees = []
    losses = [mean_cross_entropy(scores, y)]
    full = hp.goss_top_fraction >= 1.0
    for r in range(hp.n_estimators):
        g, h = logistic_grad_hess(scores, y)
        if full:
            idx = np.arange(len(y), dtype=np.int64)
            weight = None
        else:
            idx, weight = goss_sample(
                g, hp.goss_top_fraction, hp.goss_other_fraction, stream(seed, "goss", r)
            )
        tree, vals = fit_gradient_tree(
            g,
            h,
            bins,
            mode="leaf",
            rng=stream(seed, "tree", r),
            max_leaves=hp.max_leaves,
            min_samples_leaf=hp.min_samples_leaf,
            min_loss_reduction=hp.min_loss_reduction,
            feature_subsample=hp.feature_subsample,
            sample_indices=idx,
            sample_weight=weight,
        )
        scores[idx] += hp.learning_rate * vals
        if len(idx) < len(y):
            rest = np.ones(len(y), dtype=bool)
            rest[idx] = False
            scores[rest] += hp.learning_rate * tree.predict_value(X[rest])[:, 0]
        trees.append(tree)
        losses.append(mean_cross_entropy(scores, y))
    return TrainedModel(
        kind=LEAF_BOOST_GOSS,
        params=hp,
        base_score=base,
        feature_names=train.schema.feature_names,
        trees=trees,
        metadata=make_metadata(seed, train.provenance, "regular", training_loss=losses),
    )
