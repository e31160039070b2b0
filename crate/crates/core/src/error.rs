use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hermitian symmetry violated (relative residue {residue:e})")]
    SymmetryViolation { residue: f64 },

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("theta = {theta} is below the critical value 1/4 (set unsafe_subcritical to override)")]
    CriticalityViolation { theta: f64 },

    #[error("model requires a magnetic field but the state has none")]
    MissingMagneticField,

    #[error("non-finite value in state at t = {t}")]
    NonFinite { t: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("operation not supported for model {0}")]
    UnsupportedModel(&'static str),

    #[error("sweep errors are not monotone non-increasing (index {index}: {prev:e} -> {next:e})")]
    NonMonotone { index: usize, prev: f64, next: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("invalid value for `{key}`: {message}")]
    InvariantViolation { key: String, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit status for the command-line driver.
    ///
    /// | code | errors |
    /// |-----:|--------|
    /// | 4 | `Syntax`, `UnknownKey`, `InvariantViolation` |
    /// | 5 | `Io`, `Checkpoint` |
    /// | 6 | `NonFinite`, `SymmetryViolation`, `NonMonotone`, `TooFewSamples` |
    /// | 7 | `GridMismatch`, `CriticalityViolation`, `MissingMagneticField`, `UnsupportedModel`, `InvalidParameter` |
    ///
    /// Code 3 is reserved for checks that ran but failed.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Syntax { .. } | Error::UnknownKey { .. } | Error::InvariantViolation { .. } => 4,
            Error::Io(_) | Error::Checkpoint(_) => 5,
            Error::NonFinite { .. }
            | Error::SymmetryViolation { .. }
            | Error::NonMonotone { .. }
            | Error::TooFewSamples { .. } => 6,
            Error::GridMismatch
            | Error::CriticalityViolation { .. }
            | Error::MissingMagneticField
            | Error::UnsupportedModel(_)
            | Error::InvalidParameter(_) => 7,
            Error::AtTime { .. } => unreachable!("root strips AtTime"),
        }
    }

    /// Strips `AtTime` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            e => e,
        }
    }
}
