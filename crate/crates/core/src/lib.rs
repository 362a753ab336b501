//! Regression-based Expected Shortfall (ES) backtesting.
//!
//! The crate provides
//! - the bivariate and intercept ESR backtests built on joint quantile/ES
//!   regression with the 0-homogeneous Fissler–Ziegel loss ([`jointreg`],
//!   [`backtests`]),
//! - the exceedance-residual and conditional-calibration competitor tests,
//! - GARCH/EGARCH simulators, oracle and Historical Simulation forecasters
//!   and continuous misspecification designs ([`simulate`]),
//! - a Monte Carlo runner for empirical size, raw and size-adjusted power,
//!   ROC curves and partial AUC ([`evaluate`]).
//!
//! Returns follow the profit-positive convention: losses are negative, so
//! VaR and ES forecasts are negative numbers in the left tail.

pub mod backtests;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod evaluate;
pub mod jointreg;
pub mod optim;
pub mod rng;
pub mod simulate;
pub mod special;
pub mod types;

pub use backtests::{
    cc_identification, cc_test, er_test, esr_bivariate, esr_intercept, rank_by_fz0_loss,
    Backtest, CcConfig, CcVariant, EsrMode, LabelledForecasts, RankedModel,
};
pub use distributions::InnovationLaw;
pub use empirical::{empirical_es, empirical_quantile};
pub use error::{Error, Result};
pub use jointreg::{average_loss, estimate_covariance, fit_joint, fz0_loss, Design, JointFit};
pub use types::{
    validate_pair, ForecastSet, Hypothesis, ProbabilityLevel, ReturnSeries, TestReport,
    ValidatedPair, ValidationWarning,
};
