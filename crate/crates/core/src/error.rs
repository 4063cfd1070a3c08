use thiserror::Error;

use crate::domain::Transcript;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{what} out of range: must lie strictly between 0 and 1, got {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("malformed decimal {text:?}: {reason}")]
    MalformedDecimal { text: String, reason: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A recorded stream ran out in the middle of a batch. `partial` carries
    /// every complete round executed before the failing one, when the error
    /// surfaces from a full algorithm run.
    #[error("flip source exhausted: {remaining} symbol(s) remaining, {requested} requested")]
    SourceExhausted {
        remaining: u64,
        requested: u64,
        partial: Option<Box<Transcript>>,
    },

    #[error("flip stream format error at byte {offset}: unexpected {byte:?}")]
    StreamFormat { offset: usize, byte: char },

    #[error("sample-size schedule overflow at round {round}")]
    BudgetOverflow {
        round: u32,
        partial: Option<Box<Transcript>>,
    },

    #[error("decision already reached; no further flips accepted")]
    UseAfterDecision,

    #[error("trial {index} failed: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn with_partial(self, transcript: Transcript) -> Self {
        match self {
            Error::SourceExhausted {
                remaining,
                requested,
                ..
            } => Error::SourceExhausted {
                remaining,
                requested,
                partial: Some(Box::new(transcript)),
            },
            Error::BudgetOverflow { round, .. } => Error::BudgetOverflow {
                round,
                partial: Some(Box::new(transcript)),
            },
            other => other,
        }
    }

    /// The rounds completed before a run was interrupted, if any were recorded.
    pub fn partial_transcript(&self) -> Option<&Transcript> {
        match self {
            Error::SourceExhausted { partial, .. } | Error::BudgetOverflow { partial, .. } => {
                partial.as_deref()
            }
            Error::Trial { source, .. } => source.partial_transcript(),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
