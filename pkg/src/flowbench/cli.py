"""Command-line interface.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from .adversarial import ModelQuery, PerturbConfig, evasion_attack, learn_patterns
from .bench import BenchConfig, BenchReport, render_report, resolve_profile, run_benchmark
from .dataflow import (
    SplitSpec,
    ingest_csv,
    load_dataset_csv,
    save_dataset_csv,
    stratified_split,
    synthesize_dataset,
)
from .errors import ConfigError, DataError, StageError
from .evaluation import default_grid, evaluate_model, tune
from .models import (
    MODEL_KINDS,
    default_params,
    load_model,
    params_from_dict,
    save_model,
    train_model,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="flowbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="ingest a raw CSV, clean it, and write canonical train/holdout splits")
    p.add_argument("--csv", required=True, help="input CSV path")
    p.add_argument("--profile", required=True, help="builtin profile name, 'canonical', or a profile JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.70)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--benign", type=int, required=True)
    p.add_argument("--malicious", type=int, required=True)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path or directory")

    p = sub.add_parser("tune", help="grid-search hyperparameters with stratified 5-fold CV")
    p.add_argument("--train", required=True, help="canonical training CSV")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--out", help="write the tuning result JSON here")

    p = sub.add_parser("train", help="train one model and save it as JSON")
    p.add_argument("--train", required=True, help="canonical training CSV")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--params", help="hyperparameter JSON (file path or inline)")
    p.add_argument("--tune-result", help="use the best params from a saved tuning result")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output model JSON path")

    p = sub.add_parser("attack", help="run the evasion attack against a saved model")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--holdout", required=True, help="canonical holdout CSV")
    p.add_argument("--patterns-from", help="canonical training CSV to learn attack patterns from (default: the holdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=15)
    p.add_argument("--out", required=True, help="output directory for the adversarial set and trace")

    p = sub.add_parser("evaluate", help="evaluate a saved model on a canonical CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")

    p = sub.add_parser("bench", help="run the full benchmark from a config file")
    p.add_argument("--config", required=True, help="benchmark config JSON path")
    p.add_argument("--seed", type=int, help="override the config's master seed")
    p.add_argument("--out", help="output directory for the report and artifacts")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--quiet", action="store_true", help="suppress progress messages")

    p = sub.add_parser("report", help="render a saved report")
    p.add_argument("--report", required=True, help="report JSON path")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--figures", help="also render figures into this directory")

    return parser


def _read_text(path: str | Path, what: str) -> str:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{what} file not found: {path}")
    return path.read_text(encoding="utf-8")


def _load_params_arg(kind: str, text: str):
    path = Path(text)
    if path.exists():
        text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad hyperparameter JSON: {exc}") from None
    return params_from_dict(kind, doc)


def _cmd_prepare(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = ingest_csv(args.csv, resolve_profile(args.profile))
    ds = result.dataset
    print(
        f"ingested {len(ds)} rows ({ds.n_benign} benign / {ds.n_malicious} malicious), "
        f"dropped {result.dropped_rows}",
        file=sys.stderr,
    )
    if result.violations:
        print(f"warning: {len(result.violations)} family-consistency violations", file=sys.stderr)
    train, holdout = stratified_split(ds, SplitSpec(args.train_fraction, args.seed))
    save_dataset_csv(ds, out / "dataset.csv")
    save_dataset_csv(train, out / "train.csv")
    save_dataset_csv(holdout, out / "holdout.csv")
    print(f"wrote {out / 'dataset.csv'}, {out / 'train.csv'}, {out / 'holdout.csv'}")
    return 0


def _cmd_synth(args) -> int:
    ds = synthesize_dataset(args.benign, args.malicious, args.separation, args.seed)
    out = Path(args.out)
    if out.is_dir() or not out.suffix:
        out.mkdir(parents=True, exist_ok=True)
        out = out / "dataset.csv"
    save_dataset_csv(ds, out)
    print(f"wrote {out} ({len(ds)} rows)")
    return 0


def _cmd_tune(args) -> int:
    train = load_dataset_csv(args.train)
    result = tune(train, default_grid(args.model), args.seed, k=args.folds)
    text = result.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    print(
        f"best mean F1 {result.best_mean_f1:.4f} with {json.dumps(result.to_dict()['best_params'])}",
        file=sys.stderr,
    )
    return 0


def _cmd_train(args) -> int:
    train = load_dataset_csv(args.train)
    if args.params and args.tune_result:
        raise ConfigError("give either --params or --tune-result, not both")
    if args.tune_result:
        doc = json.loads(_read_text(args.tune_result, "tuning result"))
        params = params_from_dict(args.model, doc["best_params"])
    elif args.params:
        params = _load_params_arg(args.model, args.params)
    else:
        params = default_params(args.model)
    model = train_model(train, args.model, params, args.seed)
    Path(args.out).write_text(save_model(model), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_attack(args) -> int:
    model = load_model(_read_text(args.model, "model"))
    holdout = load_dataset_csv(args.holdout)
    pattern_source = load_dataset_csv(args.patterns_from) if args.patterns_from else holdout
    patterns = learn_patterns(pattern_source)
    cfg = PerturbConfig(max_iterations=args.iterations, seed=args.seed)
    query = ModelQuery.from_model(model, f"{model.kind}:{model.metadata.get('training_mode', 'regular')}")
    adv, trace = evasion_attack(query, holdout, patterns, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset_csv(adv, out / "adversarial_holdout.csv")
    (out / "trace.json").write_text(trace.to_json(), encoding="utf-8")
    final = trace.records[-1].still_detected if trace.records else trace.initial_detected
    print(
        f"attacked {trace.n_malicious} malicious rows: {trace.initial_detected} initially "
        f"detected, {final} still detected after {len(trace.records)} iterations"
    )
    print(f"wrote {out / 'adversarial_holdout.csv'}, {out / 'trace.json'}")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(_read_text(args.model, "model"))
    data = load_dataset_csv(args.data)
    m = evaluate_model(model, data)
    if args.format == "json":
        print(json.dumps(m.to_dict(), sort_keys=True))
    elif args.format == "csv":
        print("acc,prc,rcl,f1s,fpr")
        print(",".join(repr(v) for v in (m.acc, m.prc, m.rcl, m.f1s, m.fpr)))
    else:
        print("ACC     PRC     RCL     F1S     FPR")
        print("  ".join(f"{100 * v:6.2f}" for v in (m.acc, m.prc, m.rcl, m.f1s, m.fpr)))
    return 0


def _cmd_bench(args) -> int:
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cfg = BenchConfig.from_json(path.read_text(encoding="utf-8"), seed_override=args.seed)
    progress = None if args.quiet else lambda msg: print(msg, file=sys.stderr)
    report = run_benchmark(cfg, out_dir=args.out, progress=progress)
    print(render_report(report, args.format))
    if args.out:
        print(f"artifacts under {args.out}", file=sys.stderr)
    return 0


def _cmd_report(args) -> int:
    report = BenchReport.from_json(_read_text(args.report, "report"))
    print(render_report(report, args.format))
    if args.figures:
        from .figures import render_report_figures

        paths = render_report_figures(report, args.figures)
        print("wrote " + ", ".join(str(p) for p in paths), file=sys.stderr)
    return 0


_COMMANDS = {
    "prepare": _cmd_prepare,
    "synth": _cmd_synth,
    "tune": _cmd_tune,
    "train": _cmd_train,
    "attack": _cmd_attack,
    "evaluate": _cmd_evaluate,
    "bench": _cmd_bench,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        code = 2 if isinstance(exc.cause, DataError) else 3
        print(f"benchmark stage failed: {exc}", file=sys.stderr)
        return code
    except SystemExit:
        raise
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
