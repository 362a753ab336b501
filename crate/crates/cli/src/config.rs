//! Study configuration files for `esb mc`.
//!
//! A config is a flat TOML table. Every key is optional; unknown keys are
//! rejected. Example:
//!
//! ```toml
//! n_reps = 1000
//! sample_sizes = [2500]
//! nominal_sizes = [0.05]
//! tau = 0.025
//! master_seed = 7
//! dgp = "garch-t"            # garch-t | egarch-t | garch-n
//! forecaster = "hs"          # oracle | hs
//! window = 250
//! tests = ["esr-intercept", "esr-bivariate", "cc-simple"]
//! mode = "asymptotic"        # asymptotic | bootstrap
//! bootstrap = 200
//! side = "two-sided"         # two-sided | one-sided
//! design = "b"               # sweeps: a..e or the design name
//! grid_points = 21           # or an explicit `grid = [...]`
//! ```

use serde::{Deserialize, Serialize};

use esb_core::backtests::{Backtest, DEFAULT_DRAWS};
use esb_core::evaluate::McConfig;
use esb_core::ProbabilityLevel;

use crate::options::{parse_tests, Convention, DesignName, DgpName, ForecasterName, Mode, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub n_reps: usize,
    pub sample_sizes: Vec<usize>,
    pub nominal_sizes: Vec<f64>,
    pub tau: ProbabilityLevel,
    pub master_seed: u64,
    pub burnin: usize,
    pub presample: usize,
    pub dgp: DgpName,
    /// Forecaster under test; defaults to `oracle` for size studies and
    /// `hs` for power studies.
    pub forecaster: Option<ForecasterName>,
    pub window: usize,
    pub hs_convention: Convention,
    pub tests: Vec<String>,
    pub mode: Mode,
    pub bootstrap: usize,
    pub side: Side,
    pub design: Option<DesignName>,
    pub grid: Option<Vec<f64>>,
    pub grid_points: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let mc = McConfig::default();
        Self {
            n_reps: mc.n_reps,
            sample_sizes: mc.sample_sizes,
            nominal_sizes: mc.nominal_sizes,
            tau: mc.tau,
            master_seed: mc.master_seed,
            burnin: mc.burnin,
            presample: mc.presample,
            dgp: DgpName::default(),
            forecaster: None,
            window: 250,
            hs_convention: Convention::default(),
            tests: vec![
                "esr-bivariate".into(),
                "esr-intercept".into(),
                "er".into(),
                "cc-simple".into(),
                "cc-general".into(),
            ],
            mode: Mode::default(),
            bootstrap: DEFAULT_DRAWS,
            side: Side::default(),
            design: None,
            grid: None,
            grid_points: 21,
        }
    }
}

impl StudyConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn mc(&self) -> McConfig {
        McConfig {
            n_reps: self.n_reps,
            sample_sizes: self.sample_sizes.clone(),
            nominal_sizes: self.nominal_sizes.clone(),
            tau: self.tau,
            master_seed: self.master_seed,
            burnin: self.burnin,
            presample: self.presample,
        }
    }

    pub fn backtests(&self) -> anyhow::Result<Vec<Backtest>> {
        parse_tests(&self.tests, self.mode, self.bootstrap, self.side)
    }
}
