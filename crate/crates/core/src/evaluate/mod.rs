//! Monte Carlo evaluation of backtests: empirical size, raw and
//! size-adjusted power, ROC curves, partial AUC and misspecification sweeps.
//!
//! Every replication draws one path of length `burnin + presample + T`
//! from a seed derived from the master seed, the sample size and the
//! replication index. The first `burnin + presample` days only feed
//! forecasters that need history. Null and alternative forecasts of a
//! replication share the path and the test seeds.

mod curves;
mod studies;

use serde::{Deserialize, Serialize};

use crate::distributions::InnovationLaw;
use crate::error::{Error, Result};
use crate::simulate::{
    forecasts_from_sigma, garch_filter, historical_simulation, simulate_egarch, simulate_garch,
    EgarchSpec, GarchSpec, HsConvention, SimPath,
};
use crate::types::{ForecastSet, ProbabilityLevel};

pub use curves::{pauc, roc_curve, size_adjusted_critical_value, size_adjusted_power, PowerCurve};
pub use studies::{
    run_misspec_sweep, run_power_study, run_size_study, Outcomes, PowerCell, PowerRow, PowerStudy,
    SizeRow, SizeStudy, StudyTest, SweepRow, SweepStudy, MAX_EXCLUDED_SHARE,
};

/// Size range over which the partial AUC is taken.
pub const PAUC_RANGE: (f64, f64) = (0.01, 0.10);

/// Replication design shared by all studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_reps: usize,
    pub sample_sizes: Vec<usize>,
    pub nominal_sizes: Vec<f64>,
    pub tau: ProbabilityLevel,
    pub master_seed: u64,
    /// Simulated days discarded before anything is used.
    pub burnin: usize,
    /// Days between the burn-in and the evaluation sample, available to
    /// forecasters as history.
    pub presample: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_reps: 10_000,
            sample_sizes: vec![250, 500, 1000, 2500, 5000],
            nominal_sizes: vec![0.01, 0.05, 0.10],
            tau: ProbabilityLevel::BASEL,
            master_seed: 1,
            burnin: 1000,
            presample: 250,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 100 {
            return Err(Error::InvalidParameter(format!(
                "n_reps must be at least 100, got {}",
                self.n_reps
            )));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&t| t < 2) {
            return Err(Error::InvalidParameter(
                "sample_sizes must be nonempty and each at least 2".into(),
            ));
        }
        if self.nominal_sizes.is_empty() {
            return Err(Error::InvalidParameter("nominal_sizes must be nonempty".into()));
        }
        if let Some(&s) = self.nominal_sizes.iter().find(|&&s| !(s > 0.0 && s < 1.0)) {
            return Err(Error::InvalidProbability(s));
        }
        Ok(())
    }

    /// Index of the first evaluated day in a simulated path.
    pub fn start(&self) -> usize {
        self.burnin + self.presample
    }
}

/// Data-generating process of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Dgp {
    Garch(GarchSpec),
    Egarch(EgarchSpec),
}

impl Dgp {
    pub fn law(&self) -> InnovationLaw {
        match self {
            Dgp::Garch(s) => s.law,
            Dgp::Egarch(s) => s.law,
        }
    }

    /// `n` days after discarding `burnin` simulated days.
    pub fn path(&self, n: usize, burnin: usize, seed: u64) -> Result<SimPath> {
        match self {
            Dgp::Garch(s) => simulate_garch(s, n, burnin, seed),
            Dgp::Egarch(s) => simulate_egarch(s, n, burnin, seed),
        }
    }

    /// A path whose first `cfg.start()` days precede the `t` evaluated days.
    pub fn simulate(&self, cfg: &McConfig, t: usize, seed: u64) -> Result<SimPath> {
        self.path(cfg.start() + t, 0, seed)
    }
}

/// How the forecasts under evaluation are produced from a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Forecaster {
    /// True conditional volatility with the true innovation law.
    Oracle,
    /// Rolling-window Historical Simulation.
    HistoricalSimulation { window: usize, convention: HsConvention },
    /// Volatility filtered with a possibly wrong GARCH(1,1) model, with
    /// forecasts taken from its law at `level`.
    GarchFilter { spec: GarchSpec, level: ProbabilityLevel },
}

/// Forecasts on the evaluated days of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSample {
    /// Path indices of the evaluated days.
    pub days: Vec<usize>,
    pub returns: Vec<f64>,
    pub forecasts: ForecastSet,
    /// Days dropped by the forecaster.
    pub dropped: usize,
}

impl Forecaster {
    /// Forecasts for days `start..` of `path`.
    pub fn forecast(
        &self,
        path: &SimPath,
        start: usize,
        law: InnovationLaw,
        tau: ProbabilityLevel,
    ) -> Result<EvalSample> {
        let all_days = || (start..path.len()).collect::<Vec<_>>();
        let (days, forecasts, dropped) = match *self {
            Forecaster::Oracle => (
                all_days(),
                forecasts_from_sigma(&path.sigma[start..], law, tau),
                0,
            ),
            Forecaster::HistoricalSimulation { window, convention } => {
                let hs = historical_simulation(&path.returns, start, window, tau, convention)?;
                (hs.days, hs.forecasts, hs.dropped)
            }
            Forecaster::GarchFilter { spec, level } => {
                let sigma = garch_filter(&spec, &path.returns);
                (all_days(), forecasts_from_sigma(&sigma[start..], spec.law, level), 0)
            }
        };
        let returns = days.iter().map(|&d| path.returns[d]).collect();
        Ok(EvalSample {
            days,
            returns,
            forecasts,
            dropped,
        })
    }
}

/// Oracle forecasts restricted to `days`.
pub(crate) fn oracle_on(path: &SimPath, days: &[usize], law: InnovationLaw, tau: ProbabilityLevel) -> ForecastSet {
    let sigma: Vec<f64> = days.iter().map(|&d| path.sigma[d]).collect();
    forecasts_from_sigma(&sigma, law, tau)
}
