"""Cyclic per-feature additive boosting over binned features.

Each boosting round visits every feature in schema order, fits a small
single-feature gradient tree on the current residual gradients, and folds
learning_rate times its per-bin scores into that feature's score table.
The final predictor is an intercept plus 24 table lookups, so per-feature
contributions are exact.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .base import (
    CYCLIC_EBM,
    LAMBDA_L2,
    AdditiveBoostParams,
    AdditiveTables,
    TrainedModel,
    base_log_odds,
    make_metadata,
)
from .binning import build_bins
from .boosting import logistic_grad_hess, mean_cross_entropy


@dataclass
class _Segment:
    lo: int
    hi: int  # bins [lo, hi)
    g: float
    h: float
    split: int | None = None
    left: "_Segment | None" = None
    right: "_Segment | None" = None


def _fit_interval_scores(
    Gb: np.ndarray, Hb: np.ndarray, Cb: np.ndarray, max_leaves: int, min_samples_leaf: int
) -> np.ndarray:
    """Leaf-wise partition of one feature's bin axis; returns per-bin scores."""
    nb = len(Gb)
    root = _Segment(0, nb, float(Gb.sum()), float(Hb.sum()))
    heap: list = []
    counter = 0

    def best_split(seg: _Segment):
        if seg.hi - seg.lo < 2:
            return None
        g = Gb[seg.lo : seg.hi]
        h = Hb[seg.lo : seg.hi]
        c = Cb[seg.lo : seg.hi]
        gl = np.cumsum(g)[:-1]
        hl = np.cumsum(h)[:-1]
        cl = np.cumsum(c)[:-1]
        gr = seg.g - gl
        hr = seg.h - hl
        cr = c.sum() - cl
        floor = max(1, min_samples_leaf)
        ok = (cl >= floor) & (cr >= floor)
        if not ok.any():
            return None
        gain = 0.5 * (
            gl * gl / (hl + LAMBDA_L2)
            + gr * gr / (hr + LAMBDA_L2)
            - seg.g * seg.g / (seg.h + LAMBDA_L2)
        )
        gain = np.where(ok, gain, -np.inf)
        pos = int(np.argmax(gain))
        if not gain[pos] > 0.0:
            return None
        return seg.lo + pos, float(gain[pos]), (float(gl[pos]), float(hl[pos]), float(gr[pos]), float(hr[pos]))

    def consider(seg: _Segment):
        nonlocal counter
        found = best_split(seg)
        if found is not None:
            heapq.heappush(heap, (-found[1], counter, seg, found))
            counter += 1

    consider(root)
    n_leaves = 1
    while heap and n_leaves < max_leaves:
        _, _, seg, found = heapq.heappop(heap)
        b, _, (gl, hl, gr, hr) = found
        seg.split = b
        seg.left = _Segment(seg.lo, b + 1, gl, hl)
        seg.right = _Segment(b + 1, seg.hi, gr, hr)
        n_leaves += 1
        consider(seg.left)
        consider(seg.right)

    values = np.zeros(nb, dtype=np.float64)

    def emit(seg: _Segment):
        if seg.split is None:
            values[seg.lo : seg.hi] = -seg.g / (seg.h + LAMBDA_L2)
        else:
            emit(seg.left)
            emit(seg.right)

    emit(root)
    return values


def train_cyclic_ebm(train, hp: AdditiveBoostParams, seed: int) -> TrainedModel:
    """Cyclic additive boosting: 100 outer rounds over all features in order."""
    train.require_both_classes("train_cyclic_ebm")
    X = train.features
    y = train.labels.astype(np.float64)
    bins = build_bins(X, hp.max_bins)
    base = base_log_odds(train.labels)
    scores = np.full(len(y), base, dtype=np.float64)
    tables = [np.zeros(int(nb), dtype=np.float64) for nb in bins.n_bins]
    losses = [mean_cross_entropy(scores, y)]
    n_features = X.shape[1]
    for _round in range(hp.n_estimators):
        for f in range(n_features):
            g, h = logistic_grad_hess(scores, y)
            code = bins.codes[:, f]
            nb = len(tables[f])
            Gb = np.bincount(code, weights=g, minlength=nb)
            Hb = np.bincount(code, weights=h, minlength=nb)
            Cb = np.bincount(code, minlength=nb)
            v = _fit_interval_scores(Gb, Hb, Cb, hp.max_leaves, hp.min_samples_leaf)
            if hp.learning_rate == 0.0:
                continue
            tables[f] += hp.learning_rate * v
            scores += hp.learning_rate * v[code]
        losses.append(mean_cross_entropy(scores, y))
    return TrainedModel(
        kind=CYCLIC_EBM,
        params=hp,
        base_score=base,
        feature_names=train.schema.feature_names,
        tables=AdditiveTables(edges=bins.edges, tables=tuple(tables)),
        metadata=make_metadata(seed, train.provenance, "regular", training_loss=losses),
    )
