//! VaR/ES/volatility forecasters for simulated or observed returns.

use serde::{Deserialize, Serialize};

use crate::distributions::InnovationLaw;
use crate::empirical::{mean_sd, quantile_in_place};
use crate::error::{Error, Result};
use crate::types::{ForecastSet, ProbabilityLevel};

use super::{GarchSpec, SimPath};

/// Location-scale forecasts `sigma_t * q_z(tau)` and `sigma_t * es_z(tau)`.
pub fn forecasts_from_sigma(sigma: &[f64], law: InnovationLaw, tau: ProbabilityLevel) -> ForecastSet {
    let q = law.quantile(tau);
    let es = law.es(tau);
    ForecastSet {
        es: sigma.iter().map(|s| s * es).collect(),
        var: Some(sigma.iter().map(|s| s * q).collect()),
        sigma: Some(sigma.to_vec()),
    }
}

/// Forecasts from the true conditional volatility of a simulated path.
pub fn oracle_forecasts(path: &SimPath, law: InnovationLaw, tau: ProbabilityLevel) -> ForecastSet {
    forecasts_from_sigma(&path.sigma, law, tau)
}

/// Conditional volatilities implied by `spec` along observed returns,
/// starting from its unconditional variance. Entry `t` uses returns before
/// `t` only.
pub fn garch_filter(spec: &GarchSpec, returns: &[f64]) -> Vec<f64> {
    let mut sigma2 = spec.unconditional_variance();
    let mut out = Vec::with_capacity(returns.len());
    for &y in returns {
        out.push(sigma2.sqrt());
        sigma2 = spec.step(y, sigma2);
    }
    out
}

/// Tail definition of the Historical Simulation ES.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HsConvention {
    /// A past return enters the tail if it fell at or below the VaR forecast
    /// issued for its own day. Days whose own forecast predates the data fall
    /// back to the current window quantile.
    #[default]
    PastForecasts,
    /// Tail of the current window below its own quantile.
    CurrentQuantile,
}

/// Historical Simulation output aligned with the forecast days that could be
/// evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct HsForecasts {
    pub forecasts: ForecastSet,
    /// Indices (into the input returns) of the days the forecasts refer to.
    pub days: Vec<usize>,
    /// Days dropped because their window held no tail observation.
    pub dropped: usize,
}

/// Rolling-window Historical Simulation forecasts for days `first..`.
///
/// VaR is the type-1 empirical quantile of the previous `w` returns and the
/// volatility forecast their sample standard deviation.
pub fn historical_simulation(
    returns: &[f64],
    first: usize,
    w: usize,
    tau: ProbabilityLevel,
    convention: HsConvention,
) -> Result<HsForecasts> {
    if w < 2 {
        return Err(Error::InvalidParameter(format!("window must be at least 2, got {w}")));
    }
    if first < w {
        return Err(Error::InsufficientPresample {
            needed: w,
            available: first,
        });
    }
    if first >= returns.len() {
        return Err(Error::TooShort {
            needed: first + 1,
            found: returns.len(),
        });
    }
    let t_level = tau.value();
    let n = returns.len();
    let mut scratch = Vec::with_capacity(w);
    // var_at[t - w] is the forecast for day t.
    let var_at: Vec<f64> = (w..n)
        .map(|t| {
            scratch.clear();
            scratch.extend_from_slice(&returns[t - w..t]);
            quantile_in_place(&mut scratch, t_level)
        })
        .collect();

    let cap = n - first;
    let mut es = Vec::with_capacity(cap);
    let mut var = Vec::with_capacity(cap);
    let mut sigma = Vec::with_capacity(cap);
    let mut days = Vec::with_capacity(cap);
    let mut dropped = 0;
    let mut thresholds = Vec::with_capacity(w);
    for t in first..n {
        let v = var_at[t - w];
        thresholds.clear();
        thresholds.extend((t - w..t).map(|j| match convention {
            HsConvention::PastForecasts if j >= w => var_at[j - w],
            _ => v,
        }));
        let Some(tail) = tail_mean_below(&returns[t - w..t], &thresholds) else {
            dropped += 1;
            continue;
        };
        let (_, sd) = mean_sd(&returns[t - w..t]);
        es.push(tail);
        var.push(v);
        sigma.push(sd);
        days.push(t);
    }
    Ok(HsForecasts {
        forecasts: ForecastSet {
            es,
            var: Some(var),
            sigma: Some(sigma),
        },
        days,
        dropped,
    })
}

/// Mean of the window entries at or below their own threshold.
fn tail_mean_below(window: &[f64], thresholds: &[f64]) -> Option<f64> {
    let (sum, count) = window
        .iter()
        .zip(thresholds)
        .filter(|(y, v)| y <= v)
        .fold((0.0, 0usize), |(s, c), (y, _)| (s + y, c + 1));
    (count > 0).then(|| sum / count as f64)
}
