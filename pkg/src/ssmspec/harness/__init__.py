"""Experiment orchestration: datasets, instrumented runs, correlations and sweeps."""

from .config import ExperimentConfig, NoiseSettings, TestInputSettings, derive_seed
from .correlation import layer_correlation, leave_one_out, pearson, pearson_or_none
from .datasets import (
    IdentDataset,
    TestSignals,
    generate_ident_suite,
    load_dataset,
    make_test_inputs,
    regenerate_dataset,
    save_dataset,
)
from .experiment import (
    ExperimentResult,
    RunRecord,
    collect_runs,
    correlation_table,
    run_experiment,
    train_on_dataset,
)
from .figures import demo_ordering, demo_signals
from .sweeps import epoch_sweep, k_sweep

__all__ = [
    "ExperimentConfig",
    "NoiseSettings",
    "TestInputSettings",
    "derive_seed",
    "pearson",
    "pearson_or_none",
    "leave_one_out",
    "layer_correlation",
    "IdentDataset",
    "TestSignals",
    "generate_ident_suite",
    "make_test_inputs",
    "save_dataset",
    "load_dataset",
    "regenerate_dataset",
    "ExperimentResult",
    "RunRecord",
    "collect_runs",
    "correlation_table",
    "run_experiment",
    "train_on_dataset",
    "epoch_sweep",
    "k_sweep",
    "demo_signals",
    "demo_ordering",
]
