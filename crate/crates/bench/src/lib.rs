//! Fixtures shared by the benchmarks.

use esb_core::simulate::{oracle_forecasts, simulate_garch, GarchSpec};
use esb_core::{ForecastSet, ProbabilityLevel};

/// A GARCH(1,1)-t path of length `n` with oracle forecasts.
pub fn garch_fixture(n: usize, seed: u64) -> (Vec<f64>, ForecastSet) {
    let spec = GarchSpec::reference();
    let path = simulate_garch(&spec, n, 1000, seed).expect("valid reference spec");
    let fc = oracle_forecasts(&path, spec.law, ProbabilityLevel::BASEL);
    (path.returns, fc)
}
