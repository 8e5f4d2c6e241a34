"""Metrics, cross-validation, and grid-search tuning.

Malicious is the positive class everywhere.  Metric ratios with a zero
denominator are defined as 0.  Tuning selects the candidate with the
highest mean 5-fold F1, breaking ties toward the earliest candidate in
grid order.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .dataflow import FlowDataset, stratified_kfold
from .errors import DataError
from .models import (
    CYCLIC_EBM,
    LEAF_BOOST_GOSS,
    LEVEL_BOOST,
    MODEL_KINDS,
    RANDOM_FOREST,
    AdditiveBoostParams,
    ForestParams,
    LeafBoostParams,
    LevelBoostParams,
    Params,
    TrainedModel,
    params_from_dict,
    params_to_dict,
    train_model,
)
from .rng import child_seed


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    acc: float
    prc: float
    rcl: float
    f1s: float
    fpr: float

    def to_dict(self) -> dict:
        return {"acc": self.acc, "prc": self.prc, "rcl": self.rcl, "f1s": self.f1s, "fpr": self.fpr}

    @classmethod
    def from_dict(cls, doc: dict) -> "Metrics":
        return cls(doc["acc"], doc["prc"], doc["rcl"], doc["f1s"], doc["fpr"])


def confusion(labels, predictions) -> ConfusionMatrix:
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    if labels.shape != predictions.shape or labels.ndim != 1:
        raise DataError("labels and predictions must be equal-length vectors")
    for name, arr in (("labels", labels), ("predictions", predictions)):
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise DataError(f"{name} must be binary")
    pos = labels == 1
    pred_pos = predictions == 1
    return ConfusionMatrix(
        tp=int((pos & pred_pos).sum()),
        fp=int((~pos & pred_pos).sum()),
        fn=int((pos & ~pred_pos).sum()),
        tn=int((~pos & ~pred_pos).sum()),
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def f1_score(prc: float, rcl: float) -> float:
    return _ratio(2.0 * prc * rcl, prc + rcl)


def metrics_from_confusion(cm: ConfusionMatrix) -> Metrics:
    if cm.n < 1:
        raise DataError("confusion matrix is empty")
    prc = _ratio(cm.tp, cm.tp + cm.fp)
    rcl = _ratio(cm.tp, cm.tp + cm.fn)
    return Metrics(
        acc=_ratio(cm.tp + cm.tn, cm.n),
        prc=prc,
        rcl=rcl,
        f1s=f1_score(prc, rcl),
        fpr=_ratio(cm.fp, cm.fp + cm.tn),
    )


def evaluate_model(model: TrainedModel, data: FlowDataset) -> Metrics:
    return metrics_from_confusion(confusion(data.labels, model.predict_label(data.features)))


@dataclass(frozen=True)
class CVResult:
    fold_f1: tuple[float, ...]

    @property
    def mean_f1(self) -> float:
        return float(np.mean(self.fold_f1))


def cross_validate(
    train: FlowDataset, model_kind: str, params: Params, k: int = 5, seed: int = 0
) -> CVResult:
    """Stratified k-fold: train on each fold complement, score F1 on the fold."""
    folds = stratified_kfold(train, k, child_seed(seed, "cv-folds"))
    scores = []
    for i, (fold_train, fold_val) in enumerate(folds):
        model = train_model(fold_train, model_kind, params, child_seed(seed, "cv", i))
        m = evaluate_model(model, fold_val)
        scores.append(m.f1s)
    return CVResult(fold_f1=tuple(scores))


@dataclass(frozen=True)
class GridSpec:
    model_kind: str
    candidates: tuple[Params, ...]

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise DataError(f"unknown model kind {self.model_kind!r}")
        if not self.candidates:
            raise DataError("grid must contain at least one candidate")


def default_grid(model_kind: str) -> GridSpec:
    """Tuning grids spanning each hyperparameter range's endpoints."""
    if model_kind == RANDOM_FOREST:
        cands = tuple(ForestParams(max_depth=d) for d in (8, 12, 16))
    elif model_kind == LEVEL_BOOST:
        cands = tuple(
            LevelBoostParams(max_depth=d, learning_rate=lr, feature_subsample=fs)
            for d, lr, fs in itertools.product((4, 8, 12, 16), (0.1, 0.2, 0.3), (0.7, 0.8))
        )
    elif model_kind == LEAF_BOOST_GOSS:
        cands = tuple(
            LeafBoostParams(learning_rate=lr, feature_subsample=fs)
            for lr, fs in itertools.product((0.1, 0.2), (0.7, 0.8))
        )
    elif model_kind == CYCLIC_EBM:
        cands = tuple(AdditiveBoostParams(max_leaves=ml) for ml in (7, 11, 15))
    else:
        raise DataError(f"unknown model kind {model_kind!r}")
    return GridSpec(model_kind=model_kind, candidates=cands)


@dataclass(frozen=True)
class TuneResult:
    model_kind: str
    best_index: int
    best_params: Params
    candidate_params: tuple[Params, ...]
    candidate_fold_f1: tuple[tuple[float, ...], ...]
    tie_break: str = "earliest candidate in grid order on equal mean F1"

    @property
    def candidate_mean_f1(self) -> tuple[float, ...]:
        return tuple(float(np.mean(f)) for f in self.candidate_fold_f1)

    @property
    def best_mean_f1(self) -> float:
        return self.candidate_mean_f1[self.best_index]

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "best_index": self.best_index,
            "best_params": params_to_dict(self.best_params),
            "candidates": [
                {
                    "params": params_to_dict(p),
                    "fold_f1": list(f),
                    "mean_f1": float(np.mean(f)),
                }
                for p, f in zip(self.candidate_params, self.candidate_fold_f1)
            ],
            "tie_break": self.tie_break,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> "TuneResult":
        return cls(
            model_kind=doc["model_kind"],
            best_index=doc["best_index"],
            best_params=params_from_dict(doc["model_kind"], doc["best_params"]),
            candidate_params=tuple(
                params_from_dict(doc["model_kind"], c["params"]) for c in doc["candidates"]
            ),
            candidate_fold_f1=tuple(tuple(c["fold_f1"]) for c in doc["candidates"]),
            tie_break=doc.get("tie_break", ""),
        )


def tune(train: FlowDataset, grid: GridSpec, seed: int, k: int = 5) -> TuneResult:
    """Evaluate every candidate with the same folds; pick the best mean F1."""
    cv_seed = child_seed(seed, "tune")
    fold_scores = []
    best_index = 0
    best_mean = -1.0
    for i, params in enumerate(grid.candidates):
        result = cross_validate(train, grid.model_kind, params, k=k, seed=cv_seed)
        fold_scores.append(result.fold_f1)
        if result.mean_f1 > best_mean:
            best_mean = result.mean_f1
            best_index = i
    return TuneResult(
        model_kind=grid.model_kind,
        best_index=best_index,
        best_params=grid.candidates[best_index],
        candidate_params=grid.candidates,
        candidate_fold_f1=tuple(fold_scores),
    )


def retrain_full(
    train: FlowDataset,
    model_kind: str,
    params: Params,
    seed: int,
    tuning: TuneResult | None = None,
) -> TrainedModel:
    """One full-data training run with the chosen hyperparameters."""
    model = train_model(train, model_kind, params, child_seed(seed, "final"))
    if tuning is not None:
        model.metadata["tuning"] = {
            "best_index": tuning.best_index,
            "best_mean_f1": tuning.best_mean_f1,
            "fold_f1": list(tuning.candidate_fold_f1[tuning.best_index]),
        }
    return model
