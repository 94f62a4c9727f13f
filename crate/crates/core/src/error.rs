use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("function value is not finite (parameter index {index})")]
    NonFiniteValue { index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model has not been fitted")]
    NotFitted,

    #[error("positivity violation: {0}")]
    Positivity(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("treatment value {value} at index {index} is not binary")]
    NonBinaryTreatment { index: usize, value: f64 },

    #[error("{}: row {row}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("{}: row {row}: expected {expected} columns, found {found}", path.display())]
    Format {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("join failed: {} id(s) without a covariate row: {}", missing.len(), preview(missing))]
    Join { missing: Vec<String> },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("data generation failed: {0}")]
    Generation(String),

    #[error("split failed: {0}")]
    Split(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::Shape {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}
