//! ES backtests: bivariate and intercept ESR, exceedance residuals and
//! conditional calibration, plus loss-based model ranking.
//!
//! Every test validates its inputs, returns a [`TestReport`] and is
//! deterministic given its seed. Bootstrap p-values are the share of
//! bootstrap statistics at least as extreme as the observed one (no
//! `+1` correction), so they are multiples of `1/B`.

mod bootstrap;
mod cc;
mod er;
mod esr;
mod ranking;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{ForecastSet, Hypothesis, ProbabilityLevel, TestReport};

pub use cc::{cc_identification, cc_test, CcConfig, CcVariant};
pub use er::er_test;
pub use esr::{esr_bivariate, esr_intercept, esr_wald, EsrMode};
pub use ranking::{rank_by_fz0_loss, LabelledForecasts, RankedModel};

/// Default number of bootstrap draws.
pub const DEFAULT_DRAWS: usize = 1000;

/// A configured backtest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "kebab-case")]
pub enum Backtest {
    /// Wald test of `(intercept, slope) = (0, 1)`; two-sided only.
    EsrBivariate { mode: EsrMode },
    EsrIntercept { mode: EsrMode, side: Hypothesis },
    Er {
        standardized: bool,
        side: Hypothesis,
        draws: usize,
    },
    Cc { variant: CcVariant, side: Hypothesis },
}

impl Backtest {
    /// Short identifier, e.g. `esr-intercept-boot` or `cc-simple`.
    pub fn name(&self) -> String {
        let mode = |m: &EsrMode| match m {
            EsrMode::Asymptotic => "",
            EsrMode::Bootstrap(_) => "-boot",
        };
        match self {
            Backtest::EsrBivariate { mode: m } => format!("esr-bivariate{}", mode(m)),
            Backtest::EsrIntercept { mode: m, .. } => format!("esr-intercept{}", mode(m)),
            Backtest::Er { standardized, .. } => {
                if *standardized { "er-std" } else { "er" }.to_string()
            }
            Backtest::Cc { variant, .. } => match variant {
                CcVariant::Simple => "cc-simple".to_string(),
                CcVariant::General => "cc-general".to_string(),
            },
        }
    }

    pub fn side(&self) -> Hypothesis {
        match self {
            Backtest::EsrBivariate { .. } => Hypothesis::TwoSided,
            Backtest::EsrIntercept { side, .. }
            | Backtest::Er { side, .. }
            | Backtest::Cc { side, .. } => *side,
        }
    }

    /// Runs the test; `seed` drives any bootstrap resampling.
    pub fn run(&self, y: &[f64], fc: &ForecastSet, tau: ProbabilityLevel, seed: u64) -> Result<TestReport> {
        match *self {
            Backtest::EsrBivariate { mode } => esr_bivariate(y, fc, tau, mode, seed),
            Backtest::EsrIntercept { mode, side } => esr_intercept(y, fc, tau, mode, side, seed),
            Backtest::Er {
                standardized,
                side,
                draws,
            } => er_test(y, fc, tau, standardized, side, draws, seed),
            Backtest::Cc { variant, side } => cc_test(y, fc, tau, CcConfig { variant, side }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_sides() {
        let b = Backtest::EsrIntercept {
            mode: EsrMode::Bootstrap(200),
            side: Hypothesis::OneSidedLess,
        };
        assert_eq!(b.name(), "esr-intercept-boot");
        assert_eq!(b.side(), Hypothesis::OneSidedLess);
        let b = Backtest::EsrBivariate {
            mode: EsrMode::Asymptotic,
        };
        assert_eq!(b.name(), "esr-bivariate");
        assert_eq!(b.side(), Hypothesis::TwoSided);
        let b = Backtest::Er {
            standardized: true,
            side: Hypothesis::TwoSided,
            draws: 100,
        };
        assert_eq!(b.name(), "er-std");
    }
}
