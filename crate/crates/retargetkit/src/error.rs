//! Crate-wide error type.
//!
//! Everything fallible in this crate returns [`Error`]. Numerical domain
//! violations (rotation branch boundaries), model validation problems and
//! shape mismatches are separate variants so callers can tell a bad input
//! file from a configuration that wandered onto a singularity.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A rotation angle left the supported principal branch `[0, limit)`.
    #[error("rotation angle {phi} rad is outside the supported range [0, {limit})")]
    AngleOutOfRange { phi: f64, limit: f64 },

    /// A rotation came within `margin` of the branch boundary at pi, where
    /// the log map and the inverse left Jacobian blow up.
    #[error("rotation angle {phi} rad is within {margin} of the branch boundary at pi")]
    NearPiSingularity { phi: f64, margin: f64 },

    /// A matrix that was supposed to be a rotation failed the orthonormality
    /// or determinant check.
    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),

    /// The model document parsed as JSON but violated a structural rule.
    /// `path` names the offending link or joint.
    #[error("model validation failed at `{path}`: {message}")]
    ModelValidation { path: String, message: String },

    /// The document was not valid JSON for the expected schema.
    #[error("malformed document: {0}")]
    Parse(String),

    /// A vector or matrix had the wrong size for the operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    /// A body name was not present in the model or sequence it was looked
    /// up in.
    #[error("unknown body `{0}`")]
    UnknownBody(String),

    /// A retargeting pair referenced a body for which no target was given.
    #[error("missing target for body `{0}`")]
    MissingTarget(String),

    /// A scalar configuration value was outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation that needs at least one (or a minimum number of) frames,
    /// bodies or samples received fewer.
    #[error("empty or too-short input: {0}")]
    EmptyInput(String),
}

impl Error {
    /// Shorthand used by the loaders.
    pub(crate) fn model(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ModelValidation {
            path: path.into(),
            message: message.into(),
        }
    }
}
