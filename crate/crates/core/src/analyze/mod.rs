//! Calibration and sensitivity analysis of mass-action models.

mod calibrate;
mod dataset;
mod heatmap;
mod nelder_mead;
mod sensitivity;

pub use calibrate::{calibrate, sse_loss, FitResult, FitSpec, FitSummary, FreeParam};
pub use dataset::Dataset;
pub use heatmap::{heat_color, sensitivity_heatmap};
pub use nelder_mead::{minimize, Bounds, NelderMeadOptions, Optimum};
pub use sensitivity::{outcome, sensitivity, OutcomeSpec, DEFAULT_STEP};

use thiserror::Error;

use crate::solve::SolveError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzeError {
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("fit specification: {0}")]
    FitSpec(String),
    #[error("outcome specification: {0}")]
    Outcome(String),
    #[error("unknown transition '{0}'")]
    UnknownTransition(String),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SolveError),
}
