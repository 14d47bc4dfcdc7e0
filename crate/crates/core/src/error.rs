//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::month::Month;
use crate::solver::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Validation(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    #[error("non-numeric cell at row {row}, column {column} in {path}: {value:?}")]
    NonNumericCell {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("gap at {month}")]
    MonthGap { month: Month },

    #[error("duplicate month {month}")]
    DuplicateMonth { month: Month },

    #[error("overlapping weeks: week starting {week_start} begins before the previous week ends")]
    OverlappingWeeks { week_start: chrono::NaiveDate },

    #[error("insufficient history for {model}: earliest feasible evaluation month is {earliest}, requested {requested}")]
    InsufficientHistory {
        model: String,
        earliest: Month,
        requested: Month,
    },

    #[error("solver did not converge after {sweeps} sweeps (max coefficient change {last_change:.3e})")]
    NonConvergence {
        sweeps: usize,
        last_change: f64,
        last_iterate: Box<FitResult>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("model {model} failed at {month}: {source}")]
    ModelAt {
        model: String,
        month: Month,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluation windows differ across traces: {0}")]
    WindowMismatch(String),

    #[error("no naive trace present; relative reporting needs the naive baseline")]
    NaiveMissing,

    #[error("snapshot panels must share an identical case series; {0}")]
    SnapshotMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    pub fn at_month(self, model: &str, month: Month) -> Error {
        Error::ModelAt {
            model: model.to_string(),
            month,
            source: Box::new(self),
        }
    }
}
