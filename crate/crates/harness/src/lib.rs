//! Experiment driver for the dronesense simulator: configuration and
//! presets, seeded end-to-end runs of every method, sweeps, plan export and
//! result files with a run manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod output;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ExperimentConfig, MethodSpec, Preset, ScenarioConfig, SweepParameter};
pub use experiment::{run_experiment, stability_curve, ExperimentResult};
pub use output::RunManifest;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Scenario(#[from] dronesense::scenario::ScenarioError),
    #[error(transparent)]
    Power(#[from] dronesense::power::PowerError),
    #[error(transparent)]
    Plan(#[from] dronesense::plangen::PlanError),
    #[error(transparent)]
    Coordination(#[from] dronesense::coordination::CoordinationError),
    #[error(transparent)]
    Baseline(#[from] dronesense::baselines::BaselineError),
    #[error(transparent)]
    Metrics(#[from] dronesense::metrics::MetricsError),
    #[error("energy audit failed for {method} on map {map}: reported {reported} J, audited {audited} J")]
    EnergyAudit {
        method: String,
        map: usize,
        reported: f64,
        audited: f64,
    },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
