//! Exit-code carrying error.

use std::fmt;

/// Input, configuration or validation problem.
pub const EXIT_VALIDATION: u8 = 2;
/// A backtest or study failed on valid input.
pub const EXIT_TEST: u8 = 3;
/// Anything else (e.g. an output file could not be written).
pub const EXIT_OTHER: u8 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            source: e.into(),
        }
    }

    pub fn test(e: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_TEST,
            source: e.into(),
        }
    }

    pub fn other(e: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_OTHER,
            source: e.into(),
        }
    }

    /// Maps a library error to its exit code.
    pub fn from_core(e: esb_core::Error) -> Self {
        use esb_core::Error as E;
        let code = match e {
            E::InvalidProbability(_)
            | E::LengthMismatch { .. }
            | E::NonFinite { .. }
            | E::TooShort { .. }
            | E::NonNegativeEsForecast { .. }
            | E::NonPositiveSigma { .. }
            | E::MissingForecast(_)
            | E::EmptyInput
            | E::InfeasibleEs(_)
            | E::InvalidDesign(_)
            | E::OutOfRange { .. }
            | E::InvalidParameter(_)
            | E::InsufficientPresample { .. } => EXIT_VALIDATION,
            _ => EXIT_TEST,
        };
        Self {
            code,
            source: e.into(),
        }
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            code: self.code,
            source: self.source.context(msg),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

pub type CliResult<T> = Result<T, CliError>;
