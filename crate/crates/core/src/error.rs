use std::io;

/// Errors produced anywhere in the pipeline.
///
/// The variants map onto the process exit codes used by the CLI:
/// resource limits are reported separately from bad input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("malformed container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the check
        if !$cond {
            return Err($crate::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
