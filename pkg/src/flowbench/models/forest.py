"""Bagged forest of Gini-criterion classification trees."""
from __future__ import annotations

import numpy as np

from ..rng import stream
from .base import RANDOM_FOREST, ForestParams, TrainedModel, make_metadata
from .tree import fit_cart


def train_random_forest(
    train, hp: ForestParams, seed: int, bootstrap: bool = True
) -> TrainedModel:
    """Fit ``n_estimators`` trees, each on a same-size bootstrap resample.

    The predicted probability is the mean of the per-tree leaf malicious
    frequencies; ``bootstrap=False`` is a testing hook that trains every
    tree on the full data.
    """
    train.require_both_classes("train_random_forest")
    n = len(train)
    trees = []
    for i in range(hp.n_estimators):
        rng = stream(seed, "tree", i)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(fit_cart(train, rows, hp, rng))
    return TrainedModel(
        kind=RANDOM_FOREST,
        params=hp,
        base_score=0.0,
        feature_names=train.schema.feature_names,
        trees=trees,
        metadata=make_metadata(seed, train.provenance, "regular", bootstrap=bootstrap),
    )
