import json

import pytest

import flowbench as fb
from flowbench.bench import (
    BenchConfig,
    BenchReport,
    render_report,
    report_rows_from_csv,
    run_benchmark,
)
from flowbench.errors import ConfigError, StageError
from flowbench.evaluation import Metrics


SLIM_GRIDS = {
    "random_forest": [{"n_estimators": 25, "max_depth": 8}],
    "level_boost": [{"n_estimators": 25, "max_depth": 6, "learning_rate": 0.2}],
    "leaf_boost_goss": [{"n_estimators": 25, "min_samples_leaf": 5}],
    "cyclic_ebm": [{"n_estimators": 15, "max_leaves": 7}],
}


@pytest.fixture(scope="module")
def small_report():
    cfg = BenchConfig(
        seed=17,
        synthetic={"n_benign": 200, "n_malicious": 200, "separation": 1.5},
        grids=SLIM_GRIDS,
    )
    return run_benchmark(cfg)


class TestBenchConfig:
    def test_requires_one_source(self):
        with pytest.raises(ConfigError):
            BenchConfig(seed=1)
        with pytest.raises(ConfigError):
            BenchConfig(seed=1, csv_path="x.csv", profile="hikari", synthetic={"n_benign": 1})

    def test_csv_requires_profile(self):
        with pytest.raises(ConfigError):
            BenchConfig(seed=1, csv_path="x.csv")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            BenchConfig(seed=1, synthetic={"n_benign": 5, "n_malicious": 5}, model_kinds=("rf",))

    def test_json_round_trip(self):
        cfg = BenchConfig(
            seed=3,
            synthetic={"n_benign": 10, "n_malicious": 10, "separation": 2.0},
            model_kinds=(fb.RANDOM_FOREST,),
            grids={"random_forest": [{"max_depth": 8}]},
        )
        again = BenchConfig.from_json(json.dumps(cfg.to_dict()))
        assert again == cfg

    def test_seed_override(self):
        cfg = BenchConfig.from_json(
            json.dumps(
                {"seed": 1, "dataset": {"synthetic": {"n_benign": 5, "n_malicious": 5}}}
            ),
            seed_override=99,
        )
        assert cfg.seed == 99


class TestRunBenchmark:
    def test_sixteen_rows_in_fixed_order(self, small_report):
        assert len(small_report.rows) == 16
        expected = [
            (kind, training, attacked)
            for kind in fb.MODEL_KINDS
            for training in ("regular", "adversarial")
            for attacked in (False, True)
        ]
        got = [(r.model_kind, r.training, r.attacked) for r in small_report.rows]
        assert got == expected

    def test_fpr_invariance_within_pairs(self, small_report):
        for kind in fb.MODEL_KINDS:
            for training in ("regular", "adversarial"):
                clean = small_report.row(kind, training, False).metrics
                attacked = small_report.row(kind, training, True).metrics
                assert attacked.fpr == clean.fpr

    def test_recall_dominance_within_pairs(self, small_report):
        for kind in fb.MODEL_KINDS:
            for training in ("regular", "adversarial"):
                clean = small_report.row(kind, training, False).metrics
                attacked = small_report.row(kind, training, True).metrics
                assert attacked.rcl <= clean.rcl

    def test_traces_monotone(self, small_report):
        assert len(small_report.traces) == 8
        for trace in small_report.traces.values():
            series = [trace["initial_detected"]] + [r["detected"] for r in trace["iterations"]]
            assert all(a >= b for a, b in zip(series, series[1:]))

    def test_report_embeds_config_and_version(self, small_report):
        assert small_report.version == fb.__version__
        assert small_report.config["seed"] == 17
        assert small_report.config["dataset"]["synthetic"]["n_benign"] == 200

    def test_byte_identical_rerun(self):
        cfg = BenchConfig(
            seed=23,
            synthetic={"n_benign": 60, "n_malicious": 60, "separation": 2.0},
            model_kinds=(fb.RANDOM_FOREST,),
            grids={"random_forest": [{"n_estimators": 10, "max_depth": 6}]},
        )
        a = run_benchmark(cfg)
        b = run_benchmark(cfg)
        assert a.to_json() == b.to_json()

    def test_model_subset_row_count(self):
        cfg = BenchConfig(
            seed=5,
            synthetic={"n_benign": 50, "n_malicious": 50, "separation": 2.0},
            model_kinds=(fb.RANDOM_FOREST, fb.CYCLIC_EBM),
            grids={
                "random_forest": [{"n_estimators": 8, "max_depth": 6}],
                "cyclic_ebm": [{"n_estimators": 8}],
            },
        )
        report = run_benchmark(cfg)
        assert len(report.rows) == 8

    def test_artifacts_written(self, tmp_path):
        cfg = BenchConfig(
            seed=6,
            synthetic={"n_benign": 50, "n_malicious": 50, "separation": 2.0},
            model_kinds=(fb.RANDOM_FOREST,),
            grids={"random_forest": [{"n_estimators": 8, "max_depth": 6}]},
        )
        run_benchmark(cfg, out_dir=tmp_path)
        for name in (
            "train.csv",
            "holdout.csv",
            "train_augmented.csv",
            "tuning_random_forest.json",
            "model_random_forest_regular.json",
            "model_random_forest_adversarial.json",
            "adv_holdout_random_forest_regular.csv",
            "trace_random_forest_regular.json",
            "report.json",
            "report.csv",
            "report.txt",
        ):
            assert (tmp_path / name).exists(), name
        assert (tmp_path / "figures" / "f1_scores.png").exists()
        assert (tmp_path / "figures" / "attack_decay.png").exists()
        saved = BenchReport.from_json((tmp_path / "report.json").read_text())
        assert len(saved.rows) == 4

    def test_stage_error_tagging(self):
        cfg = BenchConfig(seed=1, csv_path="/nonexistent/input.csv", profile="hikari")
        with pytest.raises(StageError, match=r"\[dataset\]"):
            run_benchmark(cfg)


class TestRenderReport:
    def test_table_percent_formatting(self):
        row = fb.ReportRow(
            model_kind="level_boost",
            training="adversarial",
            attacked=True,
            metrics=Metrics(acc=0.9984, prc=0.9990, rcl=0.9964, f1s=0.9977, fpr=0.0005),
        )
        report = BenchReport(
            dataset="t", version="0", config={}, rows=(row,), traces={}, tuning={}
        )
        text = render_report(report, "table")
        line = text.strip().splitlines()[-1]
        assert line.split()[-5:] == ["99.84", "99.90", "99.64", "99.77", "0.05"]

    def test_empty_subset_header_only(self):
        report = BenchReport(dataset="t", version="0", config={}, rows=(), traces={}, tuning={})
        text = render_report(report, "table")
        assert "Model" in text
        assert "regular" not in text

    def test_csv_round_trip_lossless(self, small_report):
        text = render_report(small_report, "csv")
        rows = report_rows_from_csv(text)
        assert tuple(rows) == small_report.rows

    def test_json_round_trip(self, small_report):
        again = BenchReport.from_json(render_report(small_report, "json"))
        assert again.to_json() == small_report.to_json()

    def test_unknown_format(self, small_report):
        with pytest.raises(ConfigError):
            render_report(small_report, "yaml")
