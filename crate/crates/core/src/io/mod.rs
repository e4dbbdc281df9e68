//! Model documents, Graphviz output, repair reports and pseudo-code.

mod dot;
mod model;
mod pseudo;
mod report;

use thiserror::Error;

pub use dot::render_dot;
pub use model::{load_model, parse_model, save_model, write_atomic, InputDoc, LayerDoc, ModelDoc};
pub use pseudo::render_pseudo_code;
pub use report::{CandidateReport, DiagnosticReport, RepairReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed model document at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}
