//! Exceedance residual backtest.
//!
//! On VaR violation days the residual `Y_t - e_t` (optionally divided by the
//! volatility forecast) has mean zero under correct forecasts. The mean is
//! tested with a translation bootstrap of the studentized mean. The
//! probability level is not used at all.

use crate::empirical::mean_sd;
use crate::error::{Error, Result};
use crate::types::{check_columns, ForecastSet, Hypothesis, ProbabilityLevel, TestReport};

use super::bootstrap::{resample_indices, run_draws, share};
use super::esr::studentize;

fn studentized_mean(xs: &[f64]) -> (f64, f64) {
    let (mean, sd) = mean_sd(xs);
    (mean, studentize(mean, sd / (xs.len() as f64).sqrt()))
}

/// Exceedance residual test with `draws` bootstrap replicates.
///
/// The one-sided version rejects for negative mean residuals, i.e. ES
/// forecasts that understate the tail losses.
#[allow(clippy::too_many_arguments)]
pub fn er_test(
    y: &[f64],
    fc: &ForecastSet,
    _tau: ProbabilityLevel,
    standardized: bool,
    side: Hypothesis,
    draws: usize,
    seed: u64,
) -> Result<TestReport> {
    if draws == 0 {
        return Err(Error::InvalidParameter("bootstrap needs at least one draw".into()));
    }
    let var = fc.var()?;
    let sigma = if standardized { Some(fc.sigma()?) } else { None };
    check_columns(y.len(), &fc.es, Some(var), sigma)?;

    let residuals: Vec<f64> = (0..y.len())
        .filter(|&t| y[t] <= var[t])
        .map(|t| {
            let r = y[t] - fc.es[t];
            sigma.map_or(r, |s| r / s[t])
        })
        .collect();
    if residuals.is_empty() {
        return Err(Error::NoViolations);
    }
    let (mu, t) = studentized_mean(&residuals);

    let centred: Vec<f64> = residuals.iter().map(|r| r - mu).collect();
    let n = centred.len();
    let boot = run_draws(draws, seed, |rng| {
        let mut idx = Vec::with_capacity(n);
        resample_indices(rng, n, &mut idx);
        let xs: Vec<f64> = idx.iter().map(|&i| centred[i]).collect();
        Ok(studentized_mean(&xs).1)
    })?;
    let p = match side {
        Hypothesis::TwoSided => share(&boot.values, |s| s.abs() >= t.abs()),
        Hypothesis::OneSidedLess => share(&boot.values, |&s| s <= t),
    };
    let name = if standardized { "er-std" } else { "er" };
    Ok(TestReport::new(name, t, p, side)
        .with_bootstrap(draws)
        .with_diagnostic("mu_hat", mu)
        .with_diagnostic("n_violations", n as f64))
}
