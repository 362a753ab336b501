//! Expected Shortfall regression backtests.
//!
//! The bivariate test regresses returns on the ES forecasts in the joint
//! quantile/ES model and tests intercept 0 and slope 1. The intercept test
//! regresses the forecast errors `Y_t - e_t` on a constant and tests that
//! their ES is zero.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::empirical::{mean_sd, tail_summary};
use crate::error::{Error, Result};
use crate::jointreg::{
    estimate_covariance, fit_intercept_only, fit_joint, fit_joint_with, Design, FitOptions,
};
use crate::special::{chi2_sf, normal_cdf};
use crate::types::{check_columns, ForecastSet, Hypothesis, ProbabilityLevel, TestReport};

use super::bootstrap::{resample_indices, run_draws, share};

/// How p-values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EsrMode {
    /// Asymptotic chi-square / normal reference distribution.
    Asymptotic,
    /// Percentile-t iid bootstrap with the given number of draws (>= 100).
    Bootstrap(usize),
}

impl EsrMode {
    /// Rejects bootstrap runs with fewer than 100 draws.
    pub fn validate(self) -> Result<()> {
        match self {
            EsrMode::Bootstrap(b) if b < 100 => Err(Error::InvalidParameter(format!(
                "bootstrap needs at least 100 draws, got {b}"
            ))),
            _ => Ok(()),
        }
    }
}

fn fit_failure(e: Error) -> Error {
    match e {
        Error::NoFeasibleStart | Error::InvalidDesign(_) | Error::InfeasibleEs(_) => {
            Error::FitFailure(e.to_string())
        }
        other => other,
    }
}

/// Wald statistic of `(alpha, beta) = (0, 1)` and its chi-square(2) p-value.
pub fn esr_wald(alpha: f64, beta: f64, cov: &DMatrix<f64>) -> Result<(f64, f64)> {
    let stat = quad_form(alpha, beta - 1.0, cov)?;
    Ok((stat, chi2_sf(stat, 2.0)))
}

fn quad_form(a: f64, b: f64, cov: &DMatrix<f64>) -> Result<f64> {
    if cov.shape() != (2, 2) {
        return Err(Error::InvalidParameter("expected a 2x2 covariance".into()));
    }
    let m = Matrix2::new(cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]);
    let d = Vector2::new(a, b);
    if a == 0.0 && b == 0.0 {
        return Ok(0.0);
    }
    let inv = m.cholesky().ok_or(Error::SingularCovariance)?.inverse();
    let stat = d.dot(&(inv * d));
    if stat.is_finite() {
        Ok(stat.max(0.0))
    } else {
        Err(Error::SingularCovariance)
    }
}

/// Bivariate ESR backtest (two-sided).
pub fn esr_bivariate(
    y: &[f64],
    fc: &ForecastSet,
    tau: ProbabilityLevel,
    mode: EsrMode,
    seed: u64,
) -> Result<TestReport> {
    mode.validate()?;
    check_columns(y.len(), &fc.es, None, None)?;
    let design = Design::with_intercept(&fc.es).map_err(fit_failure)?;
    let fit = fit_joint(y, &design, tau).map_err(fit_failure)?;
    let fit = estimate_covariance(fit, y, &design, tau)?;
    let cov = fit.cov_ee.as_ref().expect("covariance estimated");
    let (alpha, beta) = (fit.theta_e[0], fit.theta_e[1]);
    let (stat, p_asym) = esr_wald(alpha, beta, cov)?;

    let mut report = match mode {
        EsrMode::Asymptotic => TestReport::new("esr-bivariate", stat, p_asym, Hypothesis::TwoSided),
        EsrMode::Bootstrap(b) => {
            let n = y.len();
            let warm = FitOptions::warm(&fit.theta_q, &fit.theta_e);
            let draws = run_draws(b, seed, |rng| {
                let mut idx = Vec::with_capacity(n);
                resample_indices(rng, n, &mut idx);
                let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                let es: Vec<f64> = idx.iter().map(|&i| fc.es[i]).collect();
                let d = Design::with_intercept(&es)?;
                let f = fit_joint_with(&ys, &d, tau, &warm)?;
                let f = estimate_covariance(f, &ys, &d, tau)?;
                let c = f.cov_ee.as_ref().expect("covariance estimated");
                quad_form(f.theta_e[0] - alpha, f.theta_e[1] - beta, c)
            })?;
            let p = share(&draws.values, |&s| s >= stat);
            TestReport::new("esr-bivariate-boot", stat, p, Hypothesis::TwoSided)
                .with_bootstrap(b)
                .with_diagnostic("redrawn", draws.redrawn as f64)
                .with_diagnostic("p_asymptotic", p_asym)
        }
    };
    report = report
        .with_diagnostic("alpha", alpha)
        .with_diagnostic("beta", beta)
        .with_diagnostic("se_alpha", cov[(0, 0)].sqrt())
        .with_diagnostic("se_beta", cov[(1, 1)].sqrt())
        .with_diagnostic("converged", if fit.converged { 1.0 } else { 0.0 });
    Ok(report)
}

/// ES of the forecast errors and its standard error.
///
/// The standard error comes from the intercept-only joint regression
/// covariance, which only depends on differences of the data. It is
/// evaluated on the errors shifted so their ES is strictly negative, where
/// the model is feasible.
fn intercept_estimate(u: &[f64], tau: ProbabilityLevel, scratch: &mut Vec<f64>) -> Result<(f64, f64)> {
    let (_, alpha, _) = tail_summary(u, tau.value(), scratch);
    let (_, sd) = mean_sd(u);
    if sd == 0.0 {
        return Ok((alpha, 0.0));
    }
    let shift = alpha + sd;
    let shifted: Vec<f64> = u.iter().map(|v| v - shift).collect();
    let fit = fit_intercept_only(&shifted, tau)?;
    let design = Design::intercept_only(u.len());
    let fit = estimate_covariance(fit, &shifted, &design, tau)?;
    let var = fit.cov_ee.expect("covariance estimated")[(0, 0)];
    Ok((alpha, var.max(0.0).sqrt()))
}

/// `num / se` with `0/0 = 0` and `x/0 = +-inf`.
pub(crate) fn studentize(num: f64, se: f64) -> f64 {
    if se > 0.0 {
        num / se
    } else if num == 0.0 {
        0.0
    } else {
        num.signum() * f64::INFINITY
    }
}

/// Intercept ESR backtest.
///
/// The one-sided version tests `H0: ES of the errors >= 0` against `< 0`,
/// i.e. it only rejects forecasts that understate the risk.
pub fn esr_intercept(
    y: &[f64],
    fc: &ForecastSet,
    tau: ProbabilityLevel,
    mode: EsrMode,
    side: Hypothesis,
    seed: u64,
) -> Result<TestReport> {
    mode.validate()?;
    check_columns(y.len(), &fc.es, None, None)?;
    let n = y.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, found: n });
    }
    let u: Vec<f64> = y.iter().zip(&fc.es).map(|(y, e)| y - e).collect();
    let mut scratch = Vec::with_capacity(n);
    let (alpha, se) = intercept_estimate(&u, tau, &mut scratch).map_err(fit_failure)?;
    let t = studentize(alpha, se);

    let report = match mode {
        EsrMode::Asymptotic => {
            let p = match side {
                Hypothesis::TwoSided => 2.0 * normal_cdf(-t.abs()),
                Hypothesis::OneSidedLess => normal_cdf(t),
            };
            TestReport::new("esr-intercept", t, p, side)
        }
        EsrMode::Bootstrap(b) => {
            let draws = run_draws(b, seed, |rng| {
                let mut idx = Vec::with_capacity(n);
                resample_indices(rng, n, &mut idx);
                let us: Vec<f64> = idx.iter().map(|&i| u[i]).collect();
                let mut scratch = Vec::with_capacity(n);
                let (a, s) = intercept_estimate(&us, tau, &mut scratch)?;
                Ok(studentize(a - alpha, s))
            })?;
            let p = match side {
                Hypothesis::TwoSided => share(&draws.values, |s| s.abs() >= t.abs()),
                Hypothesis::OneSidedLess => share(&draws.values, |&s| s <= t),
            };
            TestReport::new("esr-intercept-boot", t, p, side)
                .with_bootstrap(b)
                .with_diagnostic("redrawn", draws.redrawn as f64)
        }
    };
    Ok(report
        .with_diagnostic("alpha", alpha)
        .with_diagnostic("se_alpha", se))
}
