"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`.  The performance criterion
(9) executes a full default-grid benchmark on 10,000 synthetic rows and is
the slow one; property criteria (2, 3, 4) use the documented grid-override
config surface so their many repetitions stay inside their time budgets.
"""
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

import flowbench as fb
from flowbench.adversarial import ModelQuery, PerturbConfig, evasion_attack, learn_patterns
from flowbench.bench import BenchConfig, run_benchmark
from flowbench.evaluation import ConfusionMatrix, f1_score, metrics_from_confusion
from flowbench.models.binning import build_bins
from flowbench.models.boosting import fit_gradient_tree, logistic_grad_hess
from flowbench.rng import stream

from oracles import (
    exact_level_tree,
    exhaustive_cart,
    finite_diff_grad_hess,
    grad_best_split,
    nested_equal,
    nested_equivalent,
    nested_leaf_weighted_impurity,
    tree_as_nested,
)

SLIM_GRIDS = {
    "random_forest": [{"n_estimators": 40, "max_depth": 10}],
    "level_boost": [{"n_estimators": 40, "max_depth": 6, "learning_rate": 0.2}],
    "leaf_boost_goss": [{"n_estimators": 40, "min_samples_leaf": 10}],
    "cyclic_ebm": [{"n_estimators": 25, "max_leaves": 11}],
}

PAIRS = [(k, t) for k in fb.MODEL_KINDS for t in ("regular", "adversarial")]


def _ok(n, text):
    print(f"\nACCEPTANCE PASS criterion {n}: {text}")


def test_criterion_1_metric_identity_vs_reported_values():
    assert f1_score(0.9074, 0.8859) == pytest.approx(0.8965, abs=1e-4)
    # integer confusion matrix realizing prc=0.9074, rcl=0.8859 exactly
    cm = ConfusionMatrix(tp=9074 * 8859, fp=926 * 8859, fn=9074 * 1141, tn=0)
    m = metrics_from_confusion(cm)
    assert m.prc == pytest.approx(0.9074, abs=1e-12)
    assert m.rcl == pytest.approx(0.8859, abs=1e-12)
    assert m.f1s == pytest.approx(0.8965, abs=1e-4)
    _ok(1, f"f1({0.9074}, {0.8859}) = {m.f1s:.6f} = 89.65% at 2 decimals")


def test_criterion_2_fpr_invariance_2000_plus_2000():
    cfg = BenchConfig(
        seed=2024,
        synthetic={"n_benign": 2000, "n_malicious": 2000, "separation": 1.5},
        grids=SLIM_GRIDS,
    )
    report = run_benchmark(cfg)
    assert len(report.rows) == 16
    for kind, training in PAIRS:
        clean = report.row(kind, training, False).metrics
        attacked = report.row(kind, training, True).metrics
        assert attacked.fpr == clean.fpr, (kind, training)
    _ok(2, "attacked FPR == clean FPR bit-exactly for all 8 (model, training) pairs")


def test_criterion_3_monotone_decay_over_ten_seeds():
    checked_traces = 0
    for seed in range(10):
        cfg = BenchConfig(
            seed=3000 + seed,
            synthetic={"n_benign": 300, "n_malicious": 300, "separation": 1.2},
            grids=SLIM_GRIDS,
        )
        report = run_benchmark(cfg)
        for trace in report.traces.values():
            series = [trace["initial_detected"]] + [r["detected"] for r in trace["iterations"]]
            assert all(a >= b for a, b in zip(series, series[1:]))
            checked_traces += 1
        for kind, training in PAIRS:
            clean = report.row(kind, training, False).metrics
            attacked = report.row(kind, training, True).metrics
            assert attacked.rcl <= clean.rcl, (seed, kind, training)
    _ok(3, f"{checked_traces} traces non-increasing; attacked rcl <= clean rcl in all pairs, 10 seeds")


def test_criterion_4_adversarial_training_benefit():
    seeds_with_benefit = 0
    seeds_with_stable_f1 = 0
    for seed in range(5):
        cfg = BenchConfig(
            seed=4000 + seed,
            synthetic={"n_benign": 600, "n_malicious": 600, "separation": 1.2},
            grids=SLIM_GRIDS,
        )
        report = run_benchmark(cfg)
        benefit = 0
        stable = 0
        for kind in fb.MODEL_KINDS:
            reg_attacked = report.row(kind, "regular", True).metrics.rcl
            adv_attacked = report.row(kind, "adversarial", True).metrics.rcl
            if adv_attacked >= reg_attacked:
                benefit += 1
            reg_clean = report.row(kind, "regular", False).metrics.f1s
            adv_clean = report.row(kind, "adversarial", False).metrics.f1s
            if abs(adv_clean - reg_clean) <= 0.05:
                stable += 1
        if benefit >= 3:
            seeds_with_benefit += 1
        if stable >= 3:
            seeds_with_stable_f1 += 1
    assert seeds_with_benefit >= 4, f"benefit held in only {seeds_with_benefit}/5 seeds"
    assert seeds_with_stable_f1 >= 4, f"clean F1 stable in only {seeds_with_stable_f1}/5 seeds"
    _ok(
        4,
        f"attacked recall improved for >=3/4 kinds in {seeds_with_benefit}/5 seeds; "
        f"clean F1 within 0.05 in {seeds_with_stable_f1}/5 seeds",
    )


def _oracle_fixture(seed, n=200):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 6, size=(n, 24))
    z = rng.normal(scale=1.5, size=n)
    y = rng.integers(0, 2, size=n)
    g, h = logistic_grad_hess(z, y)
    return X, np.asarray(g), np.asarray(h), y


def test_criterion_5_oracle_equivalences():
    # (a) histogram gradient tree with max_bins >= distinct values == exact-split tree
    for seed in (0, 1):
        X, g, h, _ = _oracle_fixture(seed)
        bins = build_bins(X, max_bins=256)
        tree, _ = fit_gradient_tree(
            g, h, bins, mode="level", max_depth=4, min_leaf_weight=1.0,
            min_loss_reduction=0.01, candidate_features=np.arange(24),
        )
        oracle = exact_level_tree(X.tolist(), g.tolist(), h.tolist(), 4, 1.0, 1, 0.01)
        assert nested_equivalent(tree_as_nested(tree), oracle, X.tolist(), tol=1e-12)

    # (b) leaf-wise max_leaves=2 == brute-force best split
    for seed in (2, 3):
        X, g, h, _ = _oracle_fixture(seed)
        bins = build_bins(X, max_bins=256)
        tree, _ = fit_gradient_tree(
            g, h, bins, mode="leaf", max_leaves=2, candidate_features=np.arange(24)
        )
        best = grad_best_split(X.tolist(), g.tolist(), h.tolist(), range(len(g)), range(24), 0.0, 1, 0.0)
        assert int(tree.feature[0]) == best[0]
        left = X[:, best[0]] <= tree.threshold[0]
        oracle_left = X[:, best[0]] <= best[1]
        assert np.array_equal(left, oracle_left)

    # (c) GOSS (a=1, b=0) == plain leaf-wise boosting under identical seeds
    train = fb.synthesize_dataset(100, 100, 2.0, seed=55)
    hp = fb.LeafBoostParams(
        n_estimators=20, min_samples_leaf=5, goss_top_fraction=1.0, goss_other_fraction=0.0
    )
    model = fb.train_leaf_boost_goss(train, hp, seed=77)
    scores = np.full(len(train), model.base_score)
    yv = train.labels.astype(float)
    bins = build_bins(train.features)
    for r in range(hp.n_estimators):
        g, h = logistic_grad_hess(scores, yv)
        _, vals = fit_gradient_tree(
            g, h, bins, mode="leaf", rng=stream(77, "tree", r),
            max_leaves=hp.max_leaves, min_samples_leaf=hp.min_samples_leaf,
            min_loss_reduction=hp.min_loss_reduction, feature_subsample=hp.feature_subsample,
        )
        scores += hp.learning_rate * vals
    assert np.array_equal(model.predict_logit(train.features), scores)

    # (d) CART with max_features=24 == exhaustive CART impurity
    for seed in (4, 5):
        X, _, _, y = _oracle_fixture(seed, n=150)
        labels = ((X[:, 7] > 3.0) ^ (y == 1)).astype(np.int64)
        labels[:2] = [0, 1]
        ds = fb.FlowDataset(X, labels)
        hp = fb.ForestParams(max_depth=4, min_samples_leaf=2, max_features=24)
        from flowbench.models.tree import fit_cart

        tree = fit_cart(ds, np.arange(len(ds)), hp, stream(seed))
        oracle = exhaustive_cart(X.tolist(), labels.tolist(), 4, 2)
        mine = tree_as_nested(tree)
        assert nested_equal(mine, oracle, tol=1e-12)
        assert nested_leaf_weighted_impurity(mine, X.tolist(), labels.tolist()) == pytest.approx(
            nested_leaf_weighted_impurity(oracle, X.tolist(), labels.tolist()), abs=1e-12
        )
    _ok(5, "histogram==exact tree, leaf-wise-2==brute-force split, GOSS(1,0)==plain, CART==exhaustive")


def test_criterion_6_numerical_checks():
    # (a) logistic grad/hess vs central finite differences, logits in [-10, 10]
    for y in (0, 1):
        for z in np.linspace(-10.0, 10.0, 81):
            g, h = logistic_grad_hess(float(z), y)
            g_fd, h_fd = finite_diff_grad_hess(float(z), y)
            assert g == pytest.approx(g_fd, rel=1e-5, abs=1e-10)
            assert h == pytest.approx(h_fd, rel=1e-5, abs=1e-10)

    # (b) level-boost training cross-entropy non-increasing over 100 rounds
    for separation, seed in ((3.0, 1), (0.8, 2), (0.0, 3)):
        train = fb.synthesize_dataset(400, 400, separation, seed=seed)
        model = fb.train_level_boost(train, fb.LevelBoostParams(), seed=seed)
        losses = model.metadata["training_loss"]
        assert len(losses) == 101
        assert max(np.diff(losses)) <= 1e-12, f"loss increased at separation {separation}"

    # (c) additive-model additivity on 1e4 fuzzed samples
    train = fb.synthesize_dataset(300, 300, 1.5, seed=9)
    model = fb.train_cyclic_ebm(train, fb.AdditiveBoostParams(n_estimators=30), seed=9)
    rng = np.random.default_rng(10)
    fuzz = rng.uniform(0.0, 50.0, size=(10_000, 24))
    logits = model.predict_logit(fuzz)
    contribs = model.tables.contributions(fuzz)
    err = np.abs(logits - (model.base_score + contribs.sum(axis=1)))
    # spot-check the scalar explanation path against the vector path
    for i in range(0, 10_000, 997):
        explanation = fb.explain_additive(model, fuzz[i])
        assert abs(explanation.logit - logits[i]) <= 1e-9
    assert err.max() <= 1e-9
    _ok(6, "grad/hess vs finite differences rel<=1e-5; 100-round loss monotone; additivity <=1e-9 on 1e4 samples")


def test_criterion_7_constraint_soundness():
    ds = fb.synthesize_dataset(400, 400, 1.0, seed=70)
    train, holdout = fb.stratified_split(ds, fb.SplitSpec(0.7, seed=1))
    patterns = learn_patterns(train)
    lo, hi = patterns.interval(1)
    cfg = PerturbConfig(seed=71)
    mal = train.class_rows(1)

    n_fuzz = 100_000
    out = np.empty((n_fuzz, 24))
    for i in range(n_fuzz):
        row = mal[i % len(mal)]
        out[i] = fb.perturb(train.features[row], 1, patterns, cfg, stream(71, "fuzz", i))
    fuzzed = fb.FlowDataset(out, np.ones(n_fuzz, dtype=np.int64))
    assert fb.validate_family_constraints(fuzzed) == []
    assert (out >= lo).all() and (out <= hi).all()

    model = fb.train_level_boost(train, fb.LevelBoostParams(n_estimators=30), seed=72)
    adv, trace = evasion_attack(ModelQuery.from_model(model, "m"), holdout, patterns, cfg)
    assert fb.validate_family_constraints(adv) == []
    for row, evaded_at in trace.evasion_iteration:
        if evaded_at == 0:
            assert np.array_equal(adv.features[row], holdout.features[row])
        else:
            assert (adv.features[row] >= lo).all() and (adv.features[row] <= hi).all()
    _ok(7, f"{n_fuzz} fuzzed perturbations and the full adversarial holdout satisfy all constraints")


def test_criterion_8_determinism_across_thread_counts(tmp_path):
    script = tmp_path / "run_once.py"
    script.write_text(
        "import json, sys\n"
        "from flowbench.bench import BenchConfig, run_benchmark\n"
        "cfg = BenchConfig(seed=808, synthetic={'n_benign': 150, 'n_malicious': 150,"
        " 'separation': 1.5}, grids=json.loads(sys.argv[1]))\n"
        "print(run_benchmark(cfg).to_json())\n",
        encoding="utf-8",
    )
    outputs = []
    for threads in ("1", "4"):
        env = dict(os.environ)
        env.update(
            OMP_NUM_THREADS=threads,
            OPENBLAS_NUM_THREADS=threads,
            MKL_NUM_THREADS=threads,
        )
        proc = subprocess.run(
            [sys.executable, str(script), json.dumps(SLIM_GRIDS)],
            capture_output=True,
            text=True,
            env=env,
            check=True,
        )
        outputs.append(proc.stdout)
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["rows"]
    _ok(8, "byte-identical report JSON across runs at 1 and 4 BLAS/OMP threads")


def test_criterion_9_desk_scale_budget():
    cfg = BenchConfig(
        seed=909,
        synthetic={"n_benign": 5000, "n_malicious": 5000, "separation": 3.0},
    )
    started = time.monotonic()
    report = run_benchmark(cfg)
    elapsed = time.monotonic() - started
    assert len(report.rows) == 16
    assert elapsed < 600.0, f"benchmark took {elapsed:.0f}s"
    for kind in fb.MODEL_KINDS:
        assert report.row(kind, "regular", False).metrics.f1s >= 0.9
        assert report.row(kind, "regular", True).metrics.rcl <= report.row(
            kind, "regular", False
        ).metrics.rcl
    _ok(9, f"full default-grid 16-row benchmark on 10,000 rows in {elapsed:.0f}s (< 600s)")


HIKARI_ENV = "FLOWBENCH_HIKARI_CSV"


@pytest.mark.skipif(HIKARI_ENV not in os.environ, reason=f"set {HIKARI_ENV} to run the stretch check")
def test_criterion_10_optional_hikari_stretch():
    path = os.environ[HIKARI_ENV]
    result = fb.ingest_csv(path, fb.ColumnProfile.builtin("hikari"))
    ds = result.dataset
    cfg = BenchConfig(seed=101, csv_path=path, profile="hikari")
    report = run_benchmark(cfg)
    for kind in fb.MODEL_KINDS:
        clean = report.row(kind, "regular", False).metrics
        assert 0.75 <= clean.f1s <= 0.92, (kind, clean.f1s)
        assert clean.fpr <= 0.005, (kind, clean.fpr)
    _ok(10, f"HIKARI end-to-end on {len(ds)} rows inside the stretch bands")
