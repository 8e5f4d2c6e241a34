"""Pattern-constrained perturbations and the targeted label-only evasion attack.

The attacker learns per-class per-feature value intervals from a training
set (gray-box knowledge: feature semantics and ranges, never model
internals), perturbs malicious flows inside their own class's intervals,
and repairs each statistic family so perturbed flows stay physically
plausible.  The full attack perturbs cumulatively, freezing each sample the
first time the target model predicts benign, for at most ``max_iterations``
rounds.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataflow import BENIGN, MALICIOUS, FlowDataset
from .errors import DataError
from .rng import stream
from .schema import FeatureSchema


@dataclass(frozen=True, eq=False)
class PatternSet:
    """Per-class empirical [lo, hi] intervals for all 24 features."""

    lo: np.ndarray  # (2, n_features); row 0 benign, row 1 malicious
    hi: np.ndarray
    schema: FeatureSchema

    def __post_init__(self):
        if self.lo.shape != self.hi.shape or self.lo.shape[0] != 2:
            raise DataError("pattern bounds must be (2, n_features)")
        if (self.lo > self.hi).any():
            raise DataError("pattern lower bounds exceed upper bounds")

    def interval(self, label: int) -> tuple[np.ndarray, np.ndarray]:
        return self.lo[label], self.hi[label]


def learn_patterns(train: FlowDataset) -> PatternSet:
    """Exact per-class, per-feature min/max over the training features."""
    train.require_both_classes("learn_patterns")
    lo = np.empty((2, train.schema.n_features))
    hi = np.empty((2, train.schema.n_features))
    for label in (BENIGN, MALICIOUS):
        rows = train.class_rows(label)
        lo[label] = train.features[rows].min(axis=0)
        hi[label] = train.features[rows].max(axis=0)
    return PatternSet(lo=lo, hi=hi, schema=train.schema)


@dataclass(frozen=True)
class PerturbConfig:
    """Perturbation mechanics: every feature enters the perturbed set with
    probability ``inclusion_probability`` (the mask is redrawn while empty),
    each included feature moves by a uniform fraction of its class-interval
    width in a uniform direction, and results are clamped and repaired."""

    inclusion_probability: float = 0.5
    displacement_range: tuple[float, float] = (0.0, 0.2)
    max_iterations: int = 15
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.inclusion_probability <= 1.0:
            raise DataError("inclusion_probability must be in (0, 1]")
        lo, hi = self.displacement_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise DataError("displacement_range must satisfy 0 <= lo <= hi <= 1")
        if self.max_iterations < 1:
            raise DataError("max_iterations must be >= 1")

    def to_dict(self) -> dict:
        return {
            "inclusion_probability": self.inclusion_probability,
            "displacement_range": list(self.displacement_range),
            "max_iterations": self.max_iterations,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PerturbConfig":
        doc = dict(doc)
        if "displacement_range" in doc:
            doc["displacement_range"] = tuple(doc["displacement_range"])
        return cls(**doc)


def _repair_families(v: np.ndarray, lo: np.ndarray, hi: np.ndarray, schema: FeatureSchema) -> None:
    """Restore family consistency in place, keeping values inside class intervals.

    Min/mean/max are sorted and re-clamped (interval envelopes are ordered
    the same way for interval-consistent training data, so order survives
    the clamp).  If the resulting range is narrower than the class's
    smallest observed std, the range is widened outward within the
    intervals; the std is then clamped into its interval and capped by the
    range, and the total is raised to at least the max.
    """
    for cols in schema.family_columns().values():
        if len(cols) < 2:
            continue
        i_min, i_mean, i_max, i_std = cols["min"], cols["mean"], cols["max"], cols["std"]
        trio = sorted((v[i_min], v[i_mean], v[i_max]))
        v_min = min(max(trio[0], lo[i_min]), hi[i_min])
        v_mean = min(max(trio[1], lo[i_mean]), hi[i_mean])
        v_max = min(max(trio[2], lo[i_max]), hi[i_max])
        need = max(lo[i_std], 0.0)
        if v_max - v_min < need:
            v_max = min(hi[i_max], v_min + need)
            if v_max - v_min < need:
                v_min = max(lo[i_min], v_max - need)
            # float subtraction can leave the range an ulp short of `need`
            while v_max - v_min < need:
                if v_max < hi[i_max]:
                    v_max = float(np.nextafter(v_max, np.inf))
                elif v_min > lo[i_min]:
                    v_min = float(np.nextafter(v_min, -np.inf))
                else:
                    break  # inconsistent ingested data: the family bound wins below
        v[i_min], v[i_mean], v[i_max] = v_min, v_mean, v_max
        v_std = min(max(v[i_std], lo[i_std]), hi[i_std])
        v[i_std] = max(0.0, min(v_std, v_max - v_min))
        if "total" in cols:
            i_total = cols["total"]
            v[i_total] = max(min(max(v[i_total], lo[i_total]), hi[i_total]), v_max)


def perturb(
    sample: np.ndarray,
    class_label: int,
    patterns: PatternSet,
    cfg: PerturbConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """One constrained perturbation of a single flow.

    Draw protocol (fixed so attacks can be replayed): an inclusion mask via
    ``rng.random(n) < p`` redrawn while empty, then displacement fractions
    via ``rng.uniform(lo, hi, n)``, then signs via ``rng.integers(0, 2, n)``.
    """
    lo, hi = patterns.interval(class_label)
    n = len(lo)
    sample = np.asarray(sample, dtype=np.float64)
    if sample.shape != (n,):
        raise DataError(f"sample must have {n} features")
    mask = rng.random(n) < cfg.inclusion_probability
    while not mask.any():
        mask = rng.random(n) < cfg.inclusion_probability
    delta = rng.uniform(cfg.displacement_range[0], cfg.displacement_range[1], n)
    sign = rng.integers(0, 2, n) * 2 - 1
    v = sample.copy()
    v[mask] = sample[mask] + (sign * delta * (hi - lo))[mask]
    np.clip(v, lo, hi, out=v)
    _repair_families(v, lo, hi, patterns.schema)
    return v


def augment_training_set(
    train: FlowDataset, patterns: PatternSet, cfg: PerturbConfig
) -> FlowDataset:
    """Append one perturbed copy of every malicious sample (labels kept)."""
    mal_rows = train.class_rows(MALICIOUS)
    if len(mal_rows) == 0:
        raise DataError("augment_training_set requires at least one malicious sample")
    extra = np.empty((len(mal_rows), train.schema.n_features), dtype=np.float64)
    for j, row in enumerate(mal_rows):
        rng = stream(cfg.seed, "augment", int(row))
        extra[j] = perturb(train.features[row], MALICIOUS, patterns, cfg, rng)
    features = np.vstack([train.features, extra])
    labels = np.concatenate([train.labels, np.full(len(mal_rows), MALICIOUS, dtype=np.int64)])
    return FlowDataset(features, labels, train.schema, provenance=f"{train.provenance}+augmented")


@dataclass
class ModelQuery:
    """Label-only oracle over a model: the attack sees 0/1 predictions and
    nothing else."""

    predict: Callable[[np.ndarray], np.ndarray]
    model_id: str
    query_count: int = 0

    @classmethod
    def from_model(cls, model, model_id: str | None = None) -> "ModelQuery":
        return cls(predict=model.predict_label, model_id=model_id or model.kind)

    def query(self, samples: np.ndarray) -> np.ndarray:
        self.query_count += 1
        labels = np.asarray(self.predict(samples))
        if labels.shape != (len(samples),) or (
            labels.size and not np.isin(labels, (BENIGN, MALICIOUS)).all()
        ):
            raise DataError("model query must return one 0/1 label per sample")
        return labels.astype(np.int64)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    still_detected: int
    newly_evaded: int


@dataclass(frozen=True)
class AttackTrace:
    model_id: str
    initial_detected: int
    n_malicious: int
    records: tuple[IterationRecord, ...]
    evasion_iteration: tuple[tuple[int, int | None], ...]  # (row, iter or None=never)

    def detected_series(self) -> list[int]:
        return [self.initial_detected] + [r.still_detected for r in self.records]

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "initial_detected": self.initial_detected,
            "n_malicious": self.n_malicious,
            "iterations": [
                {"iter": r.iteration, "detected": r.still_detected, "evaded": r.newly_evaded}
                for r in self.records
            ],
            "per_sample_evasion_iter": [
                {"row": row, "evaded_at": it} for row, it in self.evasion_iteration
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def evasion_attack(
    model: ModelQuery,
    holdout: FlowDataset,
    patterns: PatternSet,
    cfg: PerturbConfig,
) -> tuple[FlowDataset, AttackTrace]:
    """Targeted evasion: perturb still-detected malicious rows cumulatively
    until none are detected or ``max_iterations`` passes; benign rows are
    returned untouched.

    Per-sample generators derive from (seed, model_id, row, iteration), so
    two attacks on models with the same id produce identical sets.
    """
    features = holdout.features.copy()
    mal_rows = holdout.class_rows(MALICIOUS)
    evaded_at: dict[int, int | None] = {int(r): None for r in mal_rows}

    if len(mal_rows) == 0:
        trace = AttackTrace(model.model_id, 0, 0, (), ())
        return holdout.subset(np.arange(len(holdout))), trace

    verdicts = model.query(features[mal_rows])
    for row, label in zip(mal_rows, verdicts):
        if label == BENIGN:
            evaded_at[int(row)] = 0
    active = mal_rows[verdicts == MALICIOUS]
    initial_detected = len(active)

    records = []
    for iteration in range(1, cfg.max_iterations + 1):
        if len(active) == 0:
            break
        for row in active:
            rng = stream(cfg.seed, model.model_id, int(row), iteration)
            features[row] = perturb(features[row], MALICIOUS, patterns, cfg, rng)
        verdicts = model.query(features[active])
        newly = active[verdicts == BENIGN]
        for row in newly:
            evaded_at[int(row)] = iteration
        active = active[verdicts == MALICIOUS]
        records.append(IterationRecord(iteration, len(active), len(newly)))

    adversarial = FlowDataset(
        features,
        holdout.labels.copy(),
        holdout.schema,
        provenance=f"{holdout.provenance}+attacked:{model.model_id}",
    )
    trace = AttackTrace(
        model_id=model.model_id,
        initial_detected=initial_detected,
        n_malicious=len(mal_rows),
        records=tuple(records),
        evasion_iteration=tuple(sorted(evaded_at.items())),
    )
    return adversarial, trace


def attack_all_models(
    models: list[ModelQuery],
    holdout: FlowDataset,
    patterns: PatternSet,
    cfg: PerturbConfig,
) -> list[tuple[FlowDataset, AttackTrace]]:
    """One independent attack per model; randomness is keyed by model id."""
    return [evasion_attack(m, holdout, patterns, cfg) for m in models]
