use thiserror::Error;

use crate::index::Mode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The request itself is malformed (bad bounds, mismatched modes, ...).
    Config,
    /// The data could not be read or violates a precondition.
    Data,
    /// A numerical stage failed (rank collapse, residue, overflow).
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: Mode, found: Mode },

    #[error("empty dictionary specification")]
    EmptySpec,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("too few samples: need at least {needed}, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("point {0:?} lies outside the torus [-1,1)^n")]
    OutsideTorus(Vec<f64>),

    #[error("all samples coincide along axis {0}")]
    DegenerateAxis(usize),

    #[error("snapshot matrix has no singular value above the rank cutoff")]
    RankZero,

    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("difference stencil of order {order} does not fit the grid along axis {axis}")]
    StencilExceedsGrid { axis: usize, order: u32 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ModeMismatch { .. } | Error::EmptySpec | Error::InvalidArgument(_) => {
                ErrorKind::Config
            }
            Error::DimensionMismatch { .. }
            | Error::TooFewSamples { .. }
            | Error::OutsideTorus(_)
            | Error::DegenerateAxis(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::RankZero
            | Error::ImaginaryResidue { .. }
            | Error::StencilExceedsGrid { .. }
            | Error::Numeric(_) => ErrorKind::Numeric,
        }
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
