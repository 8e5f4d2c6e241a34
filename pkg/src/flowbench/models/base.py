"""Model kinds, hyperparameters, and the trained-model container."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..errors import DataError, SchemaError
from ..schema import default_schema
from .tree import Tree

RANDOM_FOREST = "random_forest"
LEVEL_BOOST = "level_boost"
LEAF_BOOST_GOSS = "leaf_boost_goss"
CYCLIC_EBM = "cyclic_ebm"

MODEL_KINDS = (RANDOM_FOREST, LEVEL_BOOST, LEAF_BOOST_GOSS, CYCLIC_EBM)

# L2 leaf regularization shared by all gradient-tree learners.
LAMBDA_L2 = 1.0

_PROBA_LO = 1e-15
_PROBA_HI = float(np.nextafter(1.0, 0.0))


def _check_rate(name: str, value: float, allow_zero: bool = False):
    lo_ok = value >= 0.0 if allow_zero else value > 0.0
    if not (lo_ok and value <= 1.0):
        raise ValueError(f"{name} must be in ({'[' if allow_zero else '('}0, 1], got {value}")


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 100
    max_features: int = 4
    max_depth: int = 16
    min_samples_leaf: int = 2

    def __post_init__(self):
        if self.n_estimators < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("forest sizes must be >= 1")
        if self.max_features < 1:
            raise ValueError("max_features must be >= 1")


@dataclass(frozen=True)
class LevelBoostParams:
    n_estimators: int = 100
    max_depth: int = 8
    min_leaf_weight: float = 1.0
    min_loss_reduction: float = 0.01
    learning_rate: float = 0.1
    feature_subsample: float = 0.8

    def __post_init__(self):
        if self.n_estimators < 1 or self.max_depth < 1:
            raise ValueError("sizes must be >= 1")
        # learning_rate 0 is reserved for no-update testing.
        _check_rate("learning_rate", self.learning_rate, allow_zero=True)
        _check_rate("feature_subsample", self.feature_subsample)
        if self.min_leaf_weight < 0 or self.min_loss_reduction < 0:
            raise ValueError("minimums must be >= 0")


@dataclass(frozen=True)
class LeafBoostParams:
    n_estimators: int = 100
    max_leaves: int = 15
    min_samples_leaf: int = 20
    min_loss_reduction: float = 0.01
    learning_rate: float = 0.1
    feature_subsample: float = 0.8
    goss_top_fraction: float = 0.2
    goss_other_fraction: float = 0.1

    def __post_init__(self):
        if self.n_estimators < 1 or self.max_leaves < 2 or self.min_samples_leaf < 1:
            raise ValueError("sizes out of range")
        _check_rate("learning_rate", self.learning_rate, allow_zero=True)
        _check_rate("feature_subsample", self.feature_subsample)
        if not 0.0 < self.goss_top_fraction <= 1.0:
            raise ValueError("goss_top_fraction must be in (0, 1]")
        if not 0.0 <= self.goss_other_fraction <= 1.0 - self.goss_top_fraction + 1e-12:
            raise ValueError("goss_other_fraction must be in [0, 1 - top_fraction]")


@dataclass(frozen=True)
class AdditiveBoostParams:
    n_estimators: int = 100
    max_bins: int = 256
    max_leaves: int = 15
    min_samples_leaf: int = 2
    learning_rate: float = 0.1

    def __post_init__(self):
        if self.n_estimators < 1 or self.max_leaves < 2 or self.min_samples_leaf < 1:
            raise ValueError("sizes out of range")
        if self.max_bins < 2:
            raise ValueError("max_bins must be >= 2")
        _check_rate("learning_rate", self.learning_rate, allow_zero=True)


PARAM_TYPES = {
    RANDOM_FOREST: ForestParams,
    LEVEL_BOOST: LevelBoostParams,
    LEAF_BOOST_GOSS: LeafBoostParams,
    CYCLIC_EBM: AdditiveBoostParams,
}

Params = ForestParams | LevelBoostParams | LeafBoostParams | AdditiveBoostParams


def params_from_dict(kind: str, doc: dict) -> Params:
    if kind not in PARAM_TYPES:
        raise DataError(f"unknown model kind {kind!r}")
    try:
        return PARAM_TYPES[kind](**doc)
    except TypeError as exc:
        raise DataError(f"bad hyperparameters for {kind}: {exc}") from None


@dataclass(frozen=True, eq=False)
class AdditiveTables:
    """Per-feature bin edges and score tables of the additive model."""

    edges: tuple[np.ndarray, ...]
    tables: tuple[np.ndarray, ...]

    def contributions(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape, dtype=np.float64)
        for f, (e, t) in enumerate(zip(self.edges, self.tables)):
            out[:, f] = t[np.searchsorted(e, X[:, f], side="left")]
        return out


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(eq=False)
class TrainedModel:
    """A fitted ensemble: forest or boosted trees, or additive score tables."""

    kind: str
    params: Params
    base_score: float
    feature_names: tuple[str, ...]
    trees: list[Tree] = field(default_factory=list)
    tables: AdditiveTables | None = None
    metadata: dict = field(default_factory=dict)

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise SchemaError(
                f"expected {len(self.feature_names)} feature columns, got shape {X.shape}"
            )
        return X

    def predict_logit(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        if self.kind == RANDOM_FOREST:
            raise DataError("random_forest has no logit; use predict_proba")
        if self.kind == CYCLIC_EBM:
            return self.base_score + self.tables.contributions(X).sum(axis=1)
        scores = np.full(len(X), self.base_score, dtype=np.float64)
        lr = self.params.learning_rate
        for tree in self.trees:
            scores += lr * tree.predict_value(X)[:, 0]
        return scores

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        if len(X) == 0:
            return np.empty(0, dtype=np.float64)
        if self.kind == RANDOM_FOREST:
            acc = np.zeros(len(X), dtype=np.float64)
            for tree in self.trees:
                acc += tree.predict_value(X)[:, 1]
            p = acc / len(self.trees)
        else:
            p = _stable_sigmoid(self.predict_logit(X))
        return np.clip(p, _PROBA_LO, _PROBA_HI)

    def predict_label(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int64)


def predict_proba(model: TrainedModel, samples: np.ndarray) -> np.ndarray:
    return model.predict_proba(samples)


def predict_label(model: TrainedModel, samples: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return model.predict_label(samples, threshold)


@dataclass(frozen=True)
class AdditiveExplanation:
    intercept: float
    contributions: tuple[tuple[str, float], ...]

    @property
    def logit(self) -> float:
        return self.intercept + sum(v for _, v in self.contributions)


def explain_additive(model: TrainedModel, sample: np.ndarray) -> AdditiveExplanation:
    """Per-feature score contributions; they sum to the logit exactly."""
    if model.kind != CYCLIC_EBM:
        raise DataError(f"explain_additive requires a {CYCLIC_EBM} model, got {model.kind}")
    X = model._check_input(sample)
    if len(X) != 1:
        raise DataError("explain_additive takes a single sample")
    contribs = model.tables.contributions(X)[0]
    return AdditiveExplanation(
        intercept=model.base_score,
        contributions=tuple(zip(model.feature_names, (float(c) for c in contribs))),
    )


def base_log_odds(labels: np.ndarray) -> float:
    """Initial score: log-odds of the malicious prevalence."""
    p = float(labels.mean())
    p = min(max(p, 1e-12), 1.0 - 1e-12)
    return float(np.log(p / (1.0 - p)))


def make_metadata(seed: int, provenance: str, training_mode: str, **extra) -> dict:
    meta = {
        "seed": int(seed),
        "provenance": provenance,
        "training_mode": training_mode,
        "lambda_l2": LAMBDA_L2,
    }
    meta.update(extra)
    return meta


def params_to_dict(params: Params) -> dict:
    return asdict(params)


def schema_feature_names() -> tuple[str, ...]:
    return default_schema().feature_names
