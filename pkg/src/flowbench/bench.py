"""End-to-end benchmark: regular and adversarial training, clean and
attacked evaluation, for every configured model kind.

The pipeline is ingest -> 70/30 stratified split -> learn attack patterns
on the training set -> build one augmented training set shared by all
models -> per kind: tune with 5-fold CV, retrain on the full training set,
retrain on the augmented set with the same hyperparameters, evaluate both
on the clean holdout, attack each model separately (model-specific
adversarial holdouts), and evaluate each model on its own adversarial set.
Every derived seed comes from the master seed, so a report is a pure
function of (inputs, config, seed).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__
from .adversarial import (
    ModelQuery,
    PerturbConfig,
    augment_training_set,
    evasion_attack,
    learn_patterns,
)
from .dataflow import (
    ColumnProfile,
    FlowDataset,
    SplitSpec,
    ingest_csv,
    save_dataset_csv,
    stratified_split,
    synthesize_dataset,
)
from .errors import ConfigError, DataError, StageError
from .evaluation import (
    GridSpec,
    Metrics,
    TuneResult,
    default_grid,
    evaluate_model,
    retrain_full,
    tune,
)
from .models import MODEL_KINDS, params_from_dict, save_model
from .rng import child_seed

REGULAR = "regular"
ADVERSARIAL = "adversarial"


@dataclass(frozen=True)
class BenchConfig:
    seed: int = 0
    csv_path: str | None = None
    profile: str | None = None
    synthetic: dict | None = None  # {"n_benign", "n_malicious", "separation"}
    train_fraction: float = 0.70
    cv_folds: int = 5
    model_kinds: tuple[str, ...] = MODEL_KINDS
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    grids: dict | None = None  # kind -> list of hyperparameter dicts

    def __post_init__(self):
        if (self.csv_path is None) == (self.synthetic is None):
            raise ConfigError("config needs exactly one of csv_path or synthetic")
        if self.csv_path is not None and self.profile is None:
            raise ConfigError("csv_path requires a profile")
        unknown = set(self.model_kinds) - set(MODEL_KINDS)
        if unknown:
            raise ConfigError(f"unknown model kinds: {sorted(unknown)}")
        if not self.model_kinds:
            raise ConfigError("model_kinds must not be empty")
        if self.grids:
            bad = set(self.grids) - set(MODEL_KINDS)
            if bad:
                raise ConfigError(f"grid overrides for unknown kinds: {sorted(bad)}")

    def to_dict(self) -> dict:
        doc: dict = {"seed": self.seed, "train_fraction": self.train_fraction, "cv_folds": self.cv_folds}
        if self.csv_path is not None:
            doc["dataset"] = {"csv": self.csv_path, "profile": self.profile}
        else:
            doc["dataset"] = {"synthetic": dict(self.synthetic)}
        doc["model_kinds"] = list(self.model_kinds)
        perturb = self.perturb.to_dict()
        perturb.pop("seed", None)  # derived from the master seed
        doc["perturb"] = perturb
        if self.grids is not None:
            doc["grids"] = self.grids
        return doc

    @classmethod
    def from_dict(cls, doc: dict, seed_override: int | None = None) -> "BenchConfig":
        dataset = doc.get("dataset", {})
        perturb_doc = dict(doc.get("perturb", {}))
        perturb_doc.pop("seed", None)
        return cls(
            seed=int(doc.get("seed", 0)) if seed_override is None else seed_override,
            csv_path=dataset.get("csv"),
            profile=dataset.get("profile"),
            synthetic=dataset.get("synthetic"),
            train_fraction=float(doc.get("train_fraction", 0.70)),
            cv_folds=int(doc.get("cv_folds", 5)),
            model_kinds=tuple(doc.get("model_kinds", MODEL_KINDS)),
            perturb=PerturbConfig.from_dict(perturb_doc),
            grids=doc.get("grids"),
        )

    @classmethod
    def from_json(cls, text: str, seed_override: int | None = None) -> "BenchConfig":
        return cls.from_dict(json.loads(text), seed_override)

    def grid_for(self, kind: str) -> GridSpec:
        if self.grids and kind in self.grids:
            cands = tuple(params_from_dict(kind, d) for d in self.grids[kind])
            return GridSpec(model_kind=kind, candidates=cands)
        return default_grid(kind)


@dataclass(frozen=True)
class ReportRow:
    model_kind: str
    training: str  # regular | adversarial
    attacked: bool
    metrics: Metrics

    def to_dict(self) -> dict:
        return {
            "model": self.model_kind,
            "training": self.training,
            "attacked": self.attacked,
            **self.metrics.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReportRow":
        return cls(
            model_kind=doc["model"],
            training=doc["training"],
            attacked=bool(doc["attacked"]),
            metrics=Metrics.from_dict(doc),
        )


@dataclass(frozen=True)
class BenchReport:
    dataset: str
    version: str
    config: dict
    rows: tuple[ReportRow, ...]
    traces: dict
    tuning: dict

    def row(self, model_kind: str, training: str, attacked: bool) -> ReportRow:
        for r in self.rows:
            if (r.model_kind, r.training, r.attacked) == (model_kind, training, attacked):
                return r
        raise KeyError((model_kind, training, attacked))

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "version": self.version,
            "config": self.config,
            "rows": [r.to_dict() for r in self.rows],
            "traces": self.traces,
            "tuning": self.tuning,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchReport":
        return cls(
            dataset=doc["dataset"],
            version=doc["version"],
            config=doc["config"],
            rows=tuple(ReportRow.from_dict(r) for r in doc["rows"]),
            traces=doc.get("traces", {}),
            tuning=doc.get("tuning", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "BenchReport":
        try:
            return cls.from_dict(json.loads(text))
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"bad report JSON: {exc}") from None


def resolve_profile(name_or_path: str) -> ColumnProfile:
    if name_or_path == "canonical":
        return ColumnProfile.canonical()
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        return ColumnProfile.load(p)
    return ColumnProfile.builtin(name_or_path)


def _resolve_dataset(cfg: BenchConfig) -> FlowDataset:
    if cfg.synthetic is not None:
        spec = cfg.synthetic
        return synthesize_dataset(
            int(spec["n_benign"]),
            int(spec["n_malicious"]),
            float(spec.get("separation", 1.0)),
            seed=child_seed(cfg.seed, "synth"),
        )
    return ingest_csv(cfg.csv_path, resolve_profile(cfg.profile)).dataset


def run_benchmark(
    cfg: BenchConfig,
    out_dir: str | Path | None = None,
    progress: Callable[[str], None] | None = None,
) -> BenchReport:
    """Execute the full pipeline; intermediate artifacts are flushed to
    ``out_dir`` as they are produced so a failed run leaves its partial
    outputs for debugging."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    def note(msg: str) -> None:
        if progress is not None:
            progress(msg)

    def write_text(name: str, text: str) -> None:
        if out is not None:
            (out / name).write_text(text, encoding="utf-8")

    def write_dataset(name: str, ds: FlowDataset) -> None:
        if out is not None:
            save_dataset_csv(ds, out / name)

    def stage(tag: str, fn: Callable):
        try:
            return fn()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(tag, exc) from exc

    master = cfg.seed
    ds = stage("dataset", lambda: _resolve_dataset(cfg))
    note(f"dataset: {len(ds)} rows ({ds.n_benign} benign / {ds.n_malicious} malicious)")

    split_spec = SplitSpec(cfg.train_fraction, child_seed(master, "split"))
    train, holdout = stage("split", lambda: stratified_split(ds, split_spec))
    write_dataset("train.csv", train)
    write_dataset("holdout.csv", holdout)

    patterns = stage("patterns", lambda: learn_patterns(train))

    aug_cfg = PerturbConfig(
        inclusion_probability=cfg.perturb.inclusion_probability,
        displacement_range=cfg.perturb.displacement_range,
        max_iterations=cfg.perturb.max_iterations,
        seed=child_seed(master, "augment"),
    )
    augmented = stage("augment", lambda: augment_training_set(train, patterns, aug_cfg))
    write_dataset("train_augmented.csv", augmented)

    attack_cfg = PerturbConfig(
        inclusion_probability=cfg.perturb.inclusion_probability,
        displacement_range=cfg.perturb.displacement_range,
        max_iterations=cfg.perturb.max_iterations,
        seed=child_seed(master, "attack"),
    )

    rows: list[ReportRow] = []
    traces: dict = {}
    tuning: dict = {}
    kinds = tuple(k for k in MODEL_KINDS if k in cfg.model_kinds)
    for kind in kinds:
        note(f"{kind}: tuning")
        grid = cfg.grid_for(kind)
        tuned: TuneResult = stage(
            f"tune:{kind}", lambda: tune(train, grid, child_seed(master, kind, "tune"), k=cfg.cv_folds)
        )
        tuning[kind] = tuned.to_dict()
        write_text(f"tuning_{kind}.json", tuned.to_json())

        models = {}
        for training, data in ((REGULAR, train), (ADVERSARIAL, augmented)):
            note(f"{kind}: {training} training")
            model = stage(
                f"train:{kind}:{training}",
                lambda: retrain_full(
                    data, kind, tuned.best_params, child_seed(master, kind, "train", training), tuned
                ),
            )
            model.metadata["training_mode"] = training
            models[training] = model
            write_text(f"model_{kind}_{training}.json", save_model(model))

        for training, model in models.items():
            clean = stage(
                f"evaluate:{kind}:{training}", lambda: evaluate_model(model, holdout)
            )
            model_id = f"{kind}:{training}"
            note(f"{kind}: attacking the {training} model")
            adv_holdout, trace = stage(
                f"attack:{kind}:{training}",
                lambda: evasion_attack(
                    ModelQuery.from_model(model, model_id), holdout, patterns, attack_cfg
                ),
            )
            attacked = stage(
                f"evaluate-attacked:{kind}:{training}",
                lambda: evaluate_model(model, adv_holdout),
            )
            traces[model_id] = trace.to_dict()
            write_dataset(f"adv_holdout_{kind}_{training}.csv", adv_holdout)
            write_text(f"trace_{kind}_{training}.json", trace.to_json())
            rows.append(ReportRow(kind, training, False, clean))
            rows.append(ReportRow(kind, training, True, attacked))

    # fixed row order: per kind, regular/no, regular/yes, adversarial/no, adversarial/yes
    order = {
        (kind, training, attacked): i
        for i, (kind, training, attacked) in enumerate(
            (k, t, a) for k in kinds for t in (REGULAR, ADVERSARIAL) for a in (False, True)
        )
    }
    rows.sort(key=lambda r: order[(r.model_kind, r.training, r.attacked)])

    report = BenchReport(
        dataset=ds.provenance,
        version=__version__,
        config=cfg.to_dict(),
        rows=tuple(rows),
        traces=traces,
        tuning=tuning,
    )
    write_text("report.json", report.to_json())
    if out is not None:
        write_text("report.csv", render_report(report, "csv"))
        write_text("report.txt", render_report(report, "table"))
        from .figures import render_report_figures

        render_report_figures(report, out / "figures")
    return report


_TABLE_HEADER = ("Model", "Training", "Attacked", "ACC", "PRC", "RCL", "F1S", "FPR")


def render_report(report: BenchReport, fmt: str = "table") -> str:
    """Render as an aligned percentage table, a lossless CSV, or JSON."""
    if fmt == "json":
        return report.to_json()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", "training", "attacked", "acc", "prc", "rcl", "f1s", "fpr"])
        for r in report.rows:
            m = r.metrics
            writer.writerow(
                [r.model_kind, r.training, "yes" if r.attacked else "no"]
                + [repr(v) for v in (m.acc, m.prc, m.rcl, m.f1s, m.fpr)]
            )
        return buf.getvalue()
    if fmt == "table":
        lines = [f"dataset: {report.dataset}", ""]
        widths = (16, 12, 9, 7, 7, 7, 7, 7)
        lines.append("".join(h.ljust(w) for h, w in zip(_TABLE_HEADER, widths)))
        lines.append("-" * sum(widths))
        for r in report.rows:
            m = r.metrics
            cells = (
                r.model_kind,
                r.training,
                "yes" if r.attacked else "no",
                *(f"{100.0 * v:.2f}" for v in (m.acc, m.prc, m.rcl, m.f1s, m.fpr)),
            )
            lines.append("".join(c.ljust(w) for c, w in zip(cells, widths)))
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")


def report_rows_from_csv(text: str) -> list[ReportRow]:
    """Parse the CSV rendering back into rows (lossless round trip)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    expected = ["model", "training", "attacked", "acc", "prc", "rcl", "f1s", "fpr"]
    if header != expected:
        raise DataError("unexpected report CSV header")
    rows = []
    for rec in reader:
        if not rec:
            continue
        rows.append(
            ReportRow(
                model_kind=rec[0],
                training=rec[1],
                attacked=rec[2] == "yes",
                metrics=Metrics(*(float(v) for v in rec[3:8])),
            )
        )
    return rows
