use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can surface. Each variant carries a stable
/// code string (see [`Error::code`]) that the CLI prints on stderr.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("entry times must be strictly increasing (subject {index}: {previous} then {current})")]
    EntryTimeTie { index: usize, previous: f64, current: f64 },

    #[error("entry time {entry} of subject {index} is not before the horizon {horizon}")]
    EntryAfterHorizon { index: usize, entry: f64, horizon: f64 },

    #[error("entry schedule reaches {time}, past the horizon {horizon}")]
    ScheduleExceedsHorizon { time: f64, horizon: f64 },

    #[error("covariate dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "condition A violation: response of subject {subject} observed at {observed_at} \
         is not strictly before entry time {entry_time}"
    )]
    ConditionAViolation {
        subject: usize,
        observed_at: f64,
        entry_time: f64,
    },

    #[error("empty risk set at calendar time {t}, time-on-study {w}")]
    EmptyRiskSet { t: f64, w: f64 },

    #[error("information fraction {v} not reached (maximum attained {max_attained})")]
    InformationNotReached { v: f64, max_attained: f64 },

    #[error("no events available for estimation")]
    NoEvents,

    #[error("information matrix is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularInformation { min_eigenvalue: f64 },

    #[error("smallest eigenvalue of information/n is {value:e}, below the floor {floor:e}")]
    MinimumInformation { value: f64, floor: f64 },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (|U| = {score_norm:e}, boundary = {boundary})"
    )]
    NotConverged {
        iterations: usize,
        score_norm: f64,
        boundary: bool,
    },

    #[error("boundary quadrature failed: probability discrepancy {discrepancy:e}")]
    QuadratureFailure { discrepancy: f64 },

    #[error("insufficient replicates: {available} available, {required} required")]
    InsufficientReplicates { available: usize, required: usize },

    #[error("{failed} of {total} replicates failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::EntryTimeTie { .. } => "E_ENTRY_TIE",
            Error::EntryAfterHorizon { .. } => "E_ENTRY_AFTER_HORIZON",
            Error::ScheduleExceedsHorizon { .. } => "E_SCHEDULE_EXCEEDS_HORIZON",
            Error::DimensionMismatch { .. } => "E_DIMENSION_MISMATCH",
            Error::ConditionAViolation { .. } => "E_CONDITION_A_VIOLATION",
            Error::EmptyRiskSet { .. } => "E_EMPTY_RISK_SET",
            Error::InformationNotReached { .. } => "E_INFORMATION_NOT_REACHED",
            Error::NoEvents => "E_NO_EVENTS",
            Error::SingularInformation { .. } => "E_SINGULAR_INFORMATION",
            Error::MinimumInformation { .. } => "E_MINIMUM_INFORMATION",
            Error::NotConverged { .. } => "E_NOT_CONVERGED",
            Error::QuadratureFailure { .. } => "E_QUADRATURE_FAILURE",
            Error::InsufficientReplicates { .. } => "E_INSUFFICIENT_REPLICATES",
            Error::TooManyFailures { .. } => "E_TOO_MANY_FAILURES",
            Error::Parse { .. } => "E_PARSE",
            Error::Validation { .. } => "E_VALIDATION",
            Error::Io(_) => "E_IO",
        }
    }

    pub(crate) fn validation(key: &str, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
