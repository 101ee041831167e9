"""Ordinal-outcome trial simulation, endpoint tests and power estimation."""

from ._core import (
    CALIBRATED_BASELINE_OFFSET,
    Arm,
    ConfigError,
    DataError,
    DegenerateInput,
    InvalidArgument,
    PowerRow,
    PowerTable,
    SampleSize,
    TestResult,
    Trajectory,
    TrialDataset,
    UndefinedValue,
    analysis_panel,
    augment_dataset,
    cox_fit,
    fisher_exact,
    load_dataset,
    log_rank,
    presets,
    proportional_odds,
    resample_power,
    run_power,
    save_dataset,
    schoenfeld_sample_size,
    simulate,
    t_test,
    two_proportion_test,
    wilcoxon_rank_sum,
)

__all__ = [name for name in dir() if not name.startswith("_")]
