"""Dataset ingestion, cleaning, splitting, and desk-scale synthesis.

Raw flow CSVs are projected onto the 24-feature schema through per-dataset
column profiles; rows with missing, non-finite, or negative mapped values
are dropped.  Splits and folds are stratified and fully determined by their
seed.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError, SchemaError
from .rng import stream
from .schema import FeatureSchema, default_schema

BENIGN = 0
MALICIOUS = 1

_BUILTIN_PROFILES = ("cicids2017", "newcicids", "hikari")


@dataclass(frozen=True, eq=False)
class FlowDataset:
    """Immutable matrix of 24 flow features plus binary labels."""

    features: np.ndarray
    labels: np.ndarray
    schema: FeatureSchema = field(default_factory=default_schema)
    provenance: str = ""

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[1] != self.schema.n_features:
            raise SchemaError(
                f"expected {self.schema.n_features} feature columns, got shape {feats.shape}"
            )
        if labels.shape != (feats.shape[0],):
            raise DataError("labels must be one value per row")
        if feats.size and not np.isfinite(feats).all():
            raise DataError("features contain non-finite values")
        if feats.size and feats.min() < 0:
            raise DataError("features contain negative values")
        if labels.size and not np.isin(labels, (BENIGN, MALICIOUS)).all():
            raise DataError("labels must be 0 (benign) or 1 (malicious)")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_benign(self) -> int:
        return int((self.labels == BENIGN).sum())

    @property
    def n_malicious(self) -> int:
        return int((self.labels == MALICIOUS).sum())

    def class_rows(self, label: int) -> np.ndarray:
        return np.nonzero(self.labels == label)[0]

    def subset(self, rows: np.ndarray, provenance: str | None = None) -> "FlowDataset":
        return FlowDataset(
            self.features[rows].copy(),
            self.labels[rows].copy(),
            self.schema,
            self.provenance if provenance is None else provenance,
        )

    def require_both_classes(self, context: str) -> None:
        if self.n_benign == 0 or self.n_malicious == 0:
            raise DataError(f"{context} requires at least one sample of each class")


@dataclass(frozen=True)
class ColumnProfile:
    """Mapping from the canonical 24 features to a source CSV's columns.

    ``label_map`` maps source label strings to 0/1; values not listed fall
    back to ``default_label`` (the shipped profiles binarize unknown labels
    to malicious).  ``default_label=None`` makes unknown labels an error.
    """

    profile_name: str
    label_column: str
    label_map: dict[str, int]
    feature_map: dict[str, str]
    default_label: int | None = None
    notes: str = ""

    def __post_init__(self):
        schema = default_schema()
        missing = set(schema.feature_names) - set(self.feature_map)
        if missing:
            raise DataError(f"profile {self.profile_name!r} misses features: {sorted(missing)}")
        extra = set(self.feature_map) - set(schema.feature_names)
        if extra:
            raise DataError(f"profile {self.profile_name!r} maps unknown features: {sorted(extra)}")
        sources = list(self.feature_map.values())
        if len(set(sources)) != len(sources):
            raise DataError(f"profile {self.profile_name!r} maps two features to one column")
        for value in self.label_map.values():
            if value not in (BENIGN, MALICIOUS):
                raise DataError("label_map values must be 0 or 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ColumnProfile":
        return cls(
            profile_name=doc["profile_name"],
            label_column=doc["label_column"],
            label_map={str(k): int(v) for k, v in doc["label_map"].items()},
            feature_map=dict(doc["feature_map"]),
            default_label=doc.get("default_label"),
            notes=doc.get("notes", ""),
        )

    def to_dict(self) -> dict:
        doc = {
            "profile_name": self.profile_name,
            "label_column": self.label_column,
            "label_map": self.label_map,
            "feature_map": self.feature_map,
        }
        if self.default_label is not None:
            doc["default_label"] = self.default_label
        if self.notes:
            doc["notes"] = self.notes
        return doc

    @classmethod
    def from_json(cls, text: str) -> "ColumnProfile":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ColumnProfile":
        path = Path(path)
        if not path.exists():
            raise DataError(f"profile file not found: {path}")
        return cls.from_json(path.read_text(encoding="utf-8"))

    @classmethod
    def builtin(cls, name: str) -> "ColumnProfile":
        if name not in _BUILTIN_PROFILES:
            raise DataError(f"unknown builtin profile {name!r}; have {', '.join(_BUILTIN_PROFILES)}")
        text = resources.files("flowbench.profiles").joinpath(f"{name}.json").read_text("utf-8")
        return cls.from_json(text)

    @classmethod
    def canonical(cls) -> "ColumnProfile":
        """Identity profile for CSVs already in the canonical column layout."""
        names = default_schema().feature_names
        return cls(
            profile_name="canonical",
            label_column="label",
            label_map={"0": 0, "1": 1},
            feature_map={name: name for name in names},
        )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.70
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError("train_fraction must be in (0, 1)")


@dataclass(frozen=True)
class FamilyViolation:
    row: int
    family: str
    kind: str
    detail: str


@dataclass(frozen=True)
class IngestResult:
    dataset: FlowDataset
    dropped_rows: int
    violations: tuple[FamilyViolation, ...]


def ingest_csv(
    path: str | Path,
    profile: ColumnProfile,
    schema: FeatureSchema | None = None,
) -> IngestResult:
    """Read a raw flow CSV through a column profile.

    Header cells are whitespace-stripped before matching (several public
    dataset releases pad their headers).  Rows with a missing, unparsable,
    non-finite, or negative mapped value are dropped and counted; family
    consistency problems in surviving rows are reported as warnings only.
    """
    schema = schema or default_schema()
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")

    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        col_of = {name: i for i, name in enumerate(header)}

        feature_cols = []
        for feat in schema.feature_names:
            source = profile.feature_map[feat]
            if source not in col_of:
                raise DataError(f"{path}: missing mapped column {source!r} (for {feat})")
            feature_cols.append(col_of[source])
        if profile.label_column not in col_of:
            raise DataError(f"{path}: missing label column {profile.label_column!r}")
        label_col = col_of[profile.label_column]
        needed = max(max(feature_cols), label_col)

        rows: list[list[float]] = []
        labels: list[int] = []
        dropped = 0
        for record in reader:
            if not record:
                continue
            if len(record) <= needed:
                dropped += 1
                continue
            raw_label = record[label_col].strip()
            if raw_label in profile.label_map:
                label = profile.label_map[raw_label]
            elif profile.default_label is not None:
                label = profile.default_label
            else:
                raise DataError(f"{path}: unmappable label value {raw_label!r}")
            values = []
            ok = True
            for col in feature_cols:
                cell = record[col].strip()
                try:
                    v = float(cell)
                except ValueError:
                    ok = False
                    break
                if not math.isfinite(v) or v < 0:
                    ok = False
                    break
                values.append(v)
            if not ok:
                dropped += 1
                continue
            rows.append(values)
            labels.append(label)

    if not rows:
        raise DataError(f"{path}: zero usable rows")

    dataset = FlowDataset(
        np.asarray(rows, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        schema,
        provenance=f"{profile.profile_name}:{path.name}",
    )
    violations = tuple(validate_family_constraints(dataset))
    if violations:
        warnings.warn(
            f"{path}: {len(violations)} family-consistency violations in ingested data "
            "(kept; these are warnings for raw data)",
            stacklevel=2,
        )
    return IngestResult(dataset, dropped, violations)


def _round_half_down(x: float) -> int:
    return math.ceil(x - 0.5)


def stratified_split(ds: FlowDataset, spec: SplitSpec) -> tuple[FlowDataset, FlowDataset]:
    """Partition into train/holdout; per class, train gets
    round(train_fraction * class_count) rows (ties rounded down)."""
    ds.require_both_classes("stratified_split")
    train_rows: list[np.ndarray] = []
    holdout_rows: list[np.ndarray] = []
    for label in (BENIGN, MALICIOUS):
        rows = ds.class_rows(label)
        if len(rows) < 2:
            raise DataError(f"class {label} has fewer than 2 samples")
        n_train = _round_half_down(spec.train_fraction * len(rows))
        perm = stream(spec.seed, "split", label).permutation(len(rows))
        train_rows.append(rows[perm[:n_train]])
        holdout_rows.append(rows[perm[n_train:]])
    train_idx = np.sort(np.concatenate(train_rows))
    holdout_idx = np.sort(np.concatenate(holdout_rows))
    return (
        ds.subset(train_idx, provenance=f"{ds.provenance}[train]"),
        ds.subset(holdout_idx, provenance=f"{ds.provenance}[holdout]"),
    )


def stratified_kfold(ds: FlowDataset, k: int, seed: int) -> list[tuple[FlowDataset, FlowDataset]]:
    """k disjoint validation folds covering the dataset; per-class fold
    sizes differ by at most one."""
    if k < 2:
        raise DataError("k must be >= 2")
    ds.require_both_classes("stratified_kfold")
    fold_of = np.empty(len(ds), dtype=np.int64)
    for label in (BENIGN, MALICIOUS):
        rows = ds.class_rows(label)
        if len(rows) < k:
            raise DataError(f"class {label} has fewer than k={k} samples")
        perm = stream(seed, "fold", label).permutation(len(rows))
        fold_of[rows[perm]] = np.arange(len(rows)) % k
    pairs = []
    for j in range(k):
        val_idx = np.nonzero(fold_of == j)[0]
        train_idx = np.nonzero(fold_of != j)[0]
        pairs.append(
            (
                ds.subset(train_idx, provenance=f"{ds.provenance}[fold{j}:train]"),
                ds.subset(val_idx, provenance=f"{ds.provenance}[fold{j}:val]"),
            )
        )
    return pairs


_BASE_LOC = {
    "flow_iat": math.log(0.02),
    "fwd_iat": math.log(0.05),
    "bwd_iat": math.log(0.04),
    "fwd_bulk_rate": math.log(2.0e4),
    "bwd_bulk_rate": math.log(1.2e5),
    "active": math.log(1.5),
    "idle": math.log(8.0),
}
_LOG_SPREAD = 0.6
_SHIFTED_FAMILIES = ("flow_iat", "fwd_iat", "bwd_iat")


def synthesize_dataset(
    n_benign: int,
    n_malicious: int,
    separation: float,
    seed: int,
    schema: FeatureSchema | None = None,
) -> FlowDataset:
    """Generate a family-consistent synthetic dataset.

    Per-family magnitudes are log-normal; the malicious class's IAT-family
    locations are displaced by ``separation`` times the within-class log
    spread, so separation 0 makes the classes indistinguishable.
    """
    if n_benign < 1 or n_malicious < 1:
        raise DataError("need at least one sample per class")
    if separation < 0:
        raise DataError("separation must be >= 0")
    schema = schema or default_schema()
    rng = stream(seed, "synthesize")
    blocks = []
    for label, count in ((BENIGN, n_benign), (MALICIOUS, n_malicious)):
        cols: list[np.ndarray] = []
        for fam in schema.families:
            loc = _BASE_LOC[fam.name]
            if label == MALICIOUS and fam.name in _SHIFTED_FAMILIES:
                loc += separation * _LOG_SPREAD
            m = np.exp(rng.normal(loc, _LOG_SPREAD, count))
            if fam.stat_kinds == ("mean",):
                cols.append(m)
                continue
            w_lo = m * rng.uniform(0.1, 0.8, count)
            w_hi = m * rng.uniform(0.1, 1.0, count)
            vmin = m - w_lo
            vmax = m + w_hi
            vstd = rng.uniform(0.05, 0.95, count) * (vmax - vmin)
            by_stat = {"mean": m, "std": vstd, "max": vmax, "min": vmin}
            if "total" in fam.stat_kinds:
                by_stat["total"] = vmax * (1.0 + rng.uniform(0.2, 3.0, count))
            cols.extend(by_stat[stat] for stat in fam.stat_kinds)
        blocks.append((np.column_stack(cols), np.full(count, label, dtype=np.int64)))
    features = np.vstack([b[0] for b in blocks])
    labels = np.concatenate([b[1] for b in blocks])
    return FlowDataset(
        features,
        labels,
        schema,
        provenance=f"synthetic(benign={n_benign},malicious={n_malicious},separation={separation},seed={seed})",
    )


def validate_family_constraints(ds: FlowDataset) -> list[FamilyViolation]:
    """Report rows whose multi-statistic families are internally inconsistent:
    min > mean, mean > max, std < 0, std > max - min, or total < max."""
    out: list[FamilyViolation] = []
    feats = ds.features
    for fam_name, cols in ds.schema.family_columns().items():
        if len(cols) < 2:
            continue
        vmin = feats[:, cols["min"]]
        vmean = feats[:, cols["mean"]]
        vmax = feats[:, cols["max"]]
        vstd = feats[:, cols["std"]]
        checks = [
            ("min_gt_mean", vmin > vmean, vmin, vmean),
            ("mean_gt_max", vmean > vmax, vmean, vmax),
            ("std_negative", vstd < 0, vstd, vstd),
            ("std_gt_range", vstd > vmax - vmin, vstd, vmax - vmin),
        ]
        if "total" in cols:
            vtotal = feats[:, cols["total"]]
            checks.append(("total_lt_max", vtotal < vmax, vtotal, vmax))
        for kind, mask, lhs, rhs in checks:
            for row in np.nonzero(mask)[0]:
                out.append(
                    FamilyViolation(
                        int(row), fam_name, kind, f"{lhs[row]!r} vs {rhs[row]!r}"
                    )
                )
    out.sort(key=lambda v: (v.row, v.family, v.kind))
    return out


def save_dataset_csv(ds: FlowDataset, path: str | Path) -> None:
    """Persist in the canonical layout: the 24 schema columns plus `label`."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.schema.feature_names) + ["label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def load_dataset_csv(path: str | Path, provenance: str | None = None) -> FlowDataset:
    """Read a canonical-layout CSV produced by :func:`save_dataset_csv`."""
    schema = default_schema()
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        expected = list(schema.feature_names) + ["label"]
        if [h.strip() for h in header] != expected:
            raise SchemaError(f"{path}: header does not match the canonical 24-feature layout")
        feats = []
        labels = []
        for record in reader:
            if not record:
                continue
            feats.append([float(c) for c in record[:-1]])
            labels.append(int(record[-1]))
    if not feats:
        raise DataError(f"{path}: zero usable rows")
    return FlowDataset(
        np.asarray(feats, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        schema,
        provenance=path.name if provenance is None else provenance,
    )
