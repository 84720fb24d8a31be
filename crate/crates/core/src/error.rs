use thiserror::Error;

use crate::tape::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample count mismatch in {op}: {left} vs {right}")]
    LengthMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("domain violation in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("no sample path falls inside the window |X| < {half_width}")]
    EmptyWindow { half_width: f64 },

    #[error("regression normal matrix is singular (relative pivot {pivot:e})")]
    SingularRegression { pivot: f64 },

    #[error("regression needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("node {0:?} belongs to a different tape")]
    ForeignTape(NodeId),

    #[error("unknown node {0:?}")]
    UnknownNode(NodeId),

    #[error("node {0:?} is not an indicator")]
    NotIndicator(NodeId),

    #[error("strategy {0} needs the incoming adjoint and has no stand-alone injection")]
    RequiresAdjoint(&'static str),

    #[error("at node {node:?}: {source}")]
    AtNode {
        node: NodeId,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} experiments failed for estimator `{label}`")]
    TooManyFailures {
        label: String,
        failed: usize,
        total: usize,
    },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            detail: format!("must be positive and finite, got {value}"),
        })
    }
}
