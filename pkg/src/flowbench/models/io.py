"""Canonical JSON serialization of trained models.

Documents carry a format version and the feature-schema version; loading a
document saved by this module and saving it again is byte-identical, and a
round-tripped model predicts bit-identically.
"""
from __future__ import annotations

import json

import numpy as np

from ..errors import DataError, SchemaError
from ..schema import SCHEMA_VERSION
from .base import (
    CYCLIC_EBM,
    MODEL_KINDS,
    AdditiveTables,
    TrainedModel,
    params_from_dict,
    params_to_dict,
)
from .tree import Tree

FORMAT_VERSION = 1


def save_model(model: TrainedModel) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "schema_version": SCHEMA_VERSION,
        "model_kind": model.kind,
        "hyperparams": params_to_dict(model.params),
        "base_score": float(model.base_score),
        "feature_names": list(model.feature_names),
        "metadata": model.metadata,
    }
    if model.kind == CYCLIC_EBM:
        doc["score_tables"] = {
            "edges": [e.tolist() for e in model.tables.edges],
            "tables": [t.tolist() for t in model.tables.tables],
        }
    else:
        doc["trees"] = [t.to_dict() for t in model.trees]
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def load_model(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model JSON parse error: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError("model JSON must be an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"unsupported model format_version {doc.get('format_version')!r}; "
            f"expected {FORMAT_VERSION}"
        )
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"model schema_version {doc.get('schema_version')!r} does not match "
            f"this toolkit's {SCHEMA_VERSION!r}"
        )
    kind = doc.get("model_kind")
    if kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind {kind!r}")
    params = params_from_dict(kind, doc["hyperparams"])
    model = TrainedModel(
        kind=kind,
        params=params,
        base_score=float(doc["base_score"]),
        feature_names=tuple(doc["feature_names"]),
        metadata=doc.get("metadata", {}),
    )
    if kind == CYCLIC_EBM:
        tables = doc.get("score_tables")
        if tables is None:
            raise DataError("additive model document lacks score_tables")
        model.tables = AdditiveTables(
            edges=tuple(np.asarray(e, dtype=np.float64) for e in tables["edges"]),
            tables=tuple(np.asarray(t, dtype=np.float64) for t in tables["tables"]),
        )
    else:
        if "trees" not in doc:
            raise DataError("tree-ensemble document lacks trees")
        model.trees = [Tree.from_dict(t) for t in doc["trees"]]
    return model
