//! Seeded Monte Carlo experiments and their file output.

pub mod decision;
pub mod emit;
pub mod gowalla;
pub mod tradeoff;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::mechanisms::MechanismError;
use crate::metrics::MetricsError;

pub use decision::{
    crossovers, decision_trial, pct_better, run_decision_experiment, Crossover, CrossoverMetric,
    DecisionExperimentConfig, DecisionResult, SummaryRow, TrialRecord, TrueLocation,
};
pub use emit::{emit, to_csv, to_json, write_atomic, Format, RunManifest};
pub use gowalla::{gowalla_remap_experiment, GowallaConfig, GowallaReport, GowallaRow};
pub use tradeoff::{tradeoff_table, TradeoffRow};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("GridMismatch: {0}")]
    GridMismatch(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
