use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability level must lie in (0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} contains a non-finite value at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("series too short: need at least {needed} observations, got {found}")]
    TooShort { needed: usize, found: usize },

    #[error("ES forecast at index {index} is not strictly negative ({value})")]
    NonNegativeEsForecast { index: usize, value: f64 },

    #[error("volatility forecast at index {index} is not strictly positive ({value})")]
    NonPositiveSigma { index: usize, value: f64 },

    #[error("required forecast column `{0}` is missing")]
    MissingForecast(&'static str),

    #[error("empty input")]
    EmptyInput,

    #[error("empty tail: no observation at or below the quantile")]
    EmptyTail,

    #[error("ES value {0} is not strictly negative; the FZ0 loss is undefined")]
    InfeasibleEs(f64),

    #[error("design matrix is invalid: {0}")]
    InvalidDesign(String),

    #[error("no feasible starting value for the joint regression")]
    NoFeasibleStart,

    #[error("Lambda matrix of the sandwich covariance is singular")]
    SingularLambda,

    #[error("ES parameter covariance is singular")]
    SingularCovariance,

    #[error("moment covariance Omega is singular")]
    SingularOmega,

    #[error("joint regression failed: {0}")]
    FitFailure(String),

    #[error("no VaR violations in the sample; the test is undefined")]
    NoViolations,

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need {needed} pre-sample observations, only {available} available")]
    InsufficientPresample { needed: usize, available: usize },

    #[error("{test}: {excluded} of {reps} replications excluded, above the 1% limit")]
    TooManyExclusions {
        test: String,
        excluded: usize,
        reps: usize,
    },

    #[error("piecewise-linear curve does not span [{lo}, {hi}]")]
    CurveDoesNotSpanRange { lo: f64, hi: f64 },
}
