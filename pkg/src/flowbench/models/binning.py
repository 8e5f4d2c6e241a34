"""Per-feature histogram binning for gradient trees.

Edges sit at empirical quantiles (or at midpoints between distinct values
when a feature has at most max_bins of them, which makes binning injective
there).  The bin id of a value is the count of edges strictly below it, so
a split "bin <= b" is exactly the raw-space test "value <= edges[b]".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class BinIndex:
    edges: tuple[np.ndarray, ...]  # per feature, strictly increasing
    codes: np.ndarray  # (n, n_features) int32 bin ids of the indexed matrix
    n_bins: np.ndarray  # per-feature bin count = len(edges) + 1
    max_bins: int

    @property
    def n_features(self) -> int:
        return len(self.edges)

    def code_matrix(self, X: np.ndarray) -> np.ndarray:
        """Bin ids for an arbitrary feature matrix."""
        out = np.empty(X.shape, dtype=np.int32)
        for f, e in enumerate(self.edges):
            out[:, f] = np.searchsorted(e, X[:, f], side="left")
        return out


def _feature_edges(col: np.ndarray, max_bins: int) -> np.ndarray:
    uniq = np.unique(col)
    if len(uniq) <= max_bins:
        return (uniq[:-1] + uniq[1:]) / 2.0
    qs = np.quantile(col, np.arange(1, max_bins) / max_bins)
    return np.unique(qs)


def build_bins(features: np.ndarray, max_bins: int = 256) -> BinIndex:
    if max_bins < 2:
        raise ValueError("max_bins must be >= 2")
    edges = tuple(_feature_edges(features[:, f], max_bins) for f in range(features.shape[1]))
    codes = np.empty(features.shape, dtype=np.int32)
    for f, e in enumerate(edges):
        codes[:, f] = np.searchsorted(e, features[:, f], side="left")
    n_bins = np.asarray([len(e) + 1 for e in edges], dtype=np.int64)
    return BinIndex(edges=edges, codes=codes, n_bins=n_bins, max_bins=max_bins)
