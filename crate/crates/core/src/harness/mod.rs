//! Experiment configuration, orchestration and persistence.

mod config;
mod output;
mod run;

pub use config::{Amplitude, ExperimentConfig, InitialData, Profile, SweepConfig, CONFIG_SCHEMA};
pub use output::{
    content_hash, persist, residuals_csv, sweep_csv, MANIFEST_SCHEMA, RESIDUALS_HEADER,
    RESIDUALS_SCHEMA, SWEEP_HEADER, SWEEP_SCHEMA,
};
pub use run::{
    run, run_plan, CauchyTrend, ExperimentResult, Outcome, Plan, ResidualRow, Verdicts,
    WeakFormEntry, LATE_PAIRS, SURROGATE_INTERVALS, TREND_BAND,
};
