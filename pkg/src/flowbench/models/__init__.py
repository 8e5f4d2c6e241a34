"""The four tree-ensemble learners and their shared machinery."""
from __future__ import annotations

from ..errors import DataError
from .base import (
    CYCLIC_EBM,
    LEAF_BOOST_GOSS,
    LEVEL_BOOST,
    MODEL_KINDS,
    RANDOM_FOREST,
    AdditiveBoostParams,
    AdditiveExplanation,
    AdditiveTables,
    ForestParams,
    LeafBoostParams,
    LevelBoostParams,
    Params,
    TrainedModel,
    base_log_odds,
    explain_additive,
    params_from_dict,
    params_to_dict,
    predict_label,
    predict_proba,
)
from .binning import BinIndex, build_bins
from .boosting import (
    fit_gradient_tree,
    goss_sample,
    logistic_grad_hess,
    mean_cross_entropy,
    sigmoid,
    train_leaf_boost_goss,
    train_level_boost,
)
from .ebm import train_cyclic_ebm
from .forest import train_random_forest
from .io import load_model, save_model
from .tree import Tree, fit_cart, gini_impurity

_TRAINERS = {
    RANDOM_FOREST: train_random_forest,
    LEVEL_BOOST: train_level_boost,
    LEAF_BOOST_GOSS: train_leaf_boost_goss,
    CYCLIC_EBM: train_cyclic_ebm,
}


def train_model(train, kind: str, params: Params, seed: int) -> TrainedModel:
    """Train one model of the given kind; a pure function of (data, params, seed)."""
    if kind not in _TRAINERS:
        raise DataError(f"unknown model kind {kind!r}")
    return _TRAINERS[kind](train, params, seed)


def default_params(kind: str) -> Params:
    if kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind {kind!r}")
    from .base import PARAM_TYPES

    return PARAM_TYPES[kind]()


__all__ = [
    "AdditiveBoostParams",
    "AdditiveExplanation",
    "AdditiveTables",
    "BinIndex",
    "CYCLIC_EBM",
    "ForestParams",
    "LEAF_BOOST_GOSS",
    "LEVEL_BOOST",
    "LeafBoostParams",
    "LevelBoostParams",
    "MODEL_KINDS",
    "Params",
    "RANDOM_FOREST",
    "Tree",
    "TrainedModel",
    "base_log_odds",
    "build_bins",
    "default_params",
    "explain_additive",
    "fit_cart",
    "fit_gradient_tree",
    "gini_impurity",
    "goss_sample",
    "load_model",
    "logistic_grad_hess",
    "mean_cross_entropy",
    "params_from_dict",
    "params_to_dict",
    "predict_label",
    "predict_proba",
    "save_model",
    "sigmoid",
    "train_cyclic_ebm",
    "train_leaf_boost_goss",
    "train_level_boost",
    "train_model",
    "train_random_forest",
]
