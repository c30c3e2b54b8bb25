//! External formats: model files, suite tables, and run reports.

mod model;
mod report;
mod suite;

use thiserror::Error;

pub use model::{emit_model, parse_model, parse_model_file, ModelFile};
pub use report::{report_json, ReportDoc};
pub use suite::{import_pict_output, read_suite_csv, write_suite_csv};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("row {row}, column {column}: {message}")]
    Cell { row: usize, column: usize, message: String },
    #[error("header: {0}")]
    Header(String),
    #[error("row {row}: has {got} cells, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("cannot be written in this format: {0}")]
    Unrepresentable(String),
    #[error("{0}")]
    Csv(String),
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        IoError::Csv(e.to_string())
    }
}
