//! Dataset ingestion, synthetic data, experiment configuration and results.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod matrix;
pub mod results;
pub mod synthetic;

/// A malformed input, with the position where decoding stopped.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("byte {offset}: {detail}")]
    Binary { offset: usize, detail: String },
    #[error("line {line}, field {field}: {detail}")]
    Text {
        line: usize,
        field: usize,
        detail: String,
    },
    #[error("{0}")]
    Structure(String),
}

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, ResultsRecord};
pub use matrix::{load_matrix, save_matrix, MatrixFormat};
pub use results::{emit_results, ResultsFormat};
pub use synthetic::generate_synthetic;
