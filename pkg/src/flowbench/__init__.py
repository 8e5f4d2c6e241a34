"""flowbench: adversarial robustness benchmarking for flow-based network
intrusion detection, with from-scratch tree-ensemble learners."""

__version__ = "0.1.0"

from .adversarial import (
    AttackTrace,
    ModelQuery,
    PatternSet,
    PerturbConfig,
    attack_all_models,
    augment_training_set,
    evasion_attack,
    learn_patterns,
    perturb,
)
from .bench import BenchConfig, BenchReport, ReportRow, render_report, run_benchmark
from .dataflow import (
    BENIGN,
    MALICIOUS,
    ColumnProfile,
    FlowDataset,
    IngestResult,
    SplitSpec,
    ingest_csv,
    load_dataset_csv,
    save_dataset_csv,
    stratified_kfold,
    stratified_split,
    synthesize_dataset,
    validate_family_constraints,
)
from .errors import ConfigError, DataError, FlowBenchError, SchemaError, StageError
from .evaluation import (
    ConfusionMatrix,
    GridSpec,
    Metrics,
    TuneResult,
    confusion,
    cross_validate,
    default_grid,
    evaluate_model,
    f1_score,
    metrics_from_confusion,
    retrain_full,
    tune,
)
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
    TrainedModel,
    build_bins,
    default_params,
    explain_additive,
    fit_cart,
    fit_gradient_tree,
    gini_impurity,
    goss_sample,
    load_model,
    logistic_grad_hess,
    predict_label,
    predict_proba,
    save_model,
    train_cyclic_ebm,
    train_leaf_boost_goss,
    train_level_boost,
    train_model,
    train_random_forest,
)
from .schema import FeatureSchema, default_schema
