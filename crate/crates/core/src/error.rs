use thiserror::Error;

/// Errors raised while reading or validating profiles, workloads and calibration samples.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    /// The input is not a well-formed document (syntax, wrong type, unknown key).
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    /// A field parsed but violates a domain invariant.
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("duplicate task name `{0}`")]
    DuplicateTask(String),
    #[error("arrival references unknown task `{0}`")]
    UnknownTask(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl ProfileError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ProfileError::Invalid { field: field.into(), reason: reason.into() }
    }

    /// True for errors caused by document shape rather than by domain invariants.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, ProfileError::Malformed(_) | ProfileError::MissingField(_))
    }
}

/// Errors raised by the simulator and the brute-force oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("arrival references unknown task `{0}`")]
    UnknownTask(String),
    #[error("brute-force search supports at most {max} jobs, got {got}")]
    TooManyJobs { max: usize, got: usize },
}
