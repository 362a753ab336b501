//! Conditional calibration backtests.
//!
//! Built on the strict identification function of the (VaR, ES) pair,
//! `V = (tau - 1{y <= v}, e - v + 1{y <= v} (v - y) / tau)`, whose
//! conditional mean vanishes under correct forecasts. Test functions `h_t`
//! map `V` to `q` moment conditions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{chi2_sf, normal_cdf};
use crate::types::{check_columns, ForecastSet, Hypothesis, ProbabilityLevel, TestReport};

use super::esr::studentize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CcVariant {
    /// Identity test function; uses only the VaR and ES forecasts.
    Simple,
    /// Volatility-weighted test functions.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CcConfig {
    pub variant: CcVariant,
    pub side: Hypothesis,
}

/// Identification function of the (VaR, ES) pair at one observation.
pub fn cc_identification(y: f64, v: f64, e: f64, tau: ProbabilityLevel) -> [f64; 2] {
    let t = tau.value();
    let hit = y <= v;
    let ind = if hit { 1.0 } else { 0.0 };
    let tail = if hit { (v - y) / t } else { 0.0 };
    [t - ind, e - v + tail]
}

/// Conditional calibration test.
///
/// Two-sided: Wald statistic with the uncentred outer-product covariance and
/// a chi-square(q) reference. One-sided (`H1`: some moment is negative):
/// the minimum of the component z statistics, with a Bonferroni-combined
/// p-value `min(1, q * min_j Phi(z_j))`.
pub fn cc_test(y: &[f64], fc: &ForecastSet, tau: ProbabilityLevel, cfg: CcConfig) -> Result<TestReport> {
    let var = fc.var()?;
    let sigma = match cfg.variant {
        CcVariant::General => Some(fc.sigma()?),
        CcVariant::Simple => None,
    };
    check_columns(y.len(), &fc.es, Some(var), sigma)?;
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let t = tau.value();

    let q = match (cfg.variant, cfg.side) {
        (CcVariant::Simple, _) => 2,
        (CcVariant::General, Hypothesis::TwoSided) => 1,
        (CcVariant::General, Hypothesis::OneSidedLess) => 4,
    };
    let mut moments = DMatrix::<f64>::zeros(n, q);
    for i in 0..n {
        let [v1, v2] = cc_identification(y[i], var[i], fc.es[i], tau);
        match (cfg.variant, cfg.side) {
            (CcVariant::Simple, _) => {
                moments[(i, 0)] = v1;
                moments[(i, 1)] = v2;
            }
            (CcVariant::General, Hypothesis::TwoSided) => {
                let s = sigma.expect("checked")[i];
                moments[(i, 0)] = s * ((fc.es[i] - var[i]) / t * v1 + v2);
            }
            (CcVariant::General, Hypothesis::OneSidedLess) => {
                let s = sigma.expect("checked")[i];
                moments[(i, 0)] = v1;
                moments[(i, 1)] = var[i].abs() * v1;
                moments[(i, 2)] = v2;
                moments[(i, 3)] = v2 / s;
            }
        }
    }
    let nf = n as f64;
    let mean: DVector<f64> = moments.row_sum().transpose() / nf;
    let omega = moments.transpose() * &moments / nf;
    let name = match cfg.variant {
        CcVariant::Simple => "cc-simple",
        CcVariant::General => "cc-general",
    };

    let report = match cfg.side {
        Hypothesis::TwoSided => {
            let stat = if mean.iter().all(|&m| m == 0.0) {
                0.0
            } else {
                let chol = omega.clone().cholesky().ok_or(Error::SingularOmega)?;
                let s = nf * mean.dot(&chol.solve(&mean));
                if !s.is_finite() {
                    return Err(Error::SingularOmega);
                }
                s.max(0.0)
            };
            TestReport::new(name, stat, chi2_sf(stat, q as f64), Hypothesis::TwoSided)
        }
        Hypothesis::OneSidedLess => {
            let z: Vec<f64> = (0..q)
                .map(|j| studentize(nf.sqrt() * mean[j], omega[(j, j)].sqrt()))
                .collect();
            let z_min = z.iter().copied().fold(f64::INFINITY, f64::min);
            let p = (q as f64 * normal_cdf(z_min)).min(1.0);
            let mut r = TestReport::new(name, z_min, p, Hypothesis::OneSidedLess);
            for (j, zj) in z.iter().enumerate() {
                r = r.with_diagnostic(&format!("z{}", j + 1), *zj);
            }
            r
        }
    };
    Ok(report.with_diagnostic("moments", q as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{oracle_forecasts, simulate_garch, GarchSpec};

    fn tau(t: f64) -> ProbabilityLevel {
        ProbabilityLevel::new(t).unwrap()
    }

    #[test]
    fn identification_examples() {
        let a = cc_identification(-3.0, -2.0, -2.5, tau(0.025));
        assert!((a[0] + 0.975).abs() < 1e-15 && (a[1] - 39.5).abs() < 1e-12);
        let b = cc_identification(1.0, -2.0, -2.5, tau(0.025));
        assert_eq!(b, [0.025, -0.5]);
        let c = cc_identification(-1.0, -1.0, -1.0, tau(0.3));
        assert_eq!(c, [0.3 - 1.0, 0.0]);
    }

    #[test]
    fn vanishing_moments_give_zero_statistic() {
        // tau = 0.5, one violation in two days: V1 = (-0.5, 0.5) and
        // V2 = (-2.5 + 2 + 2, -3.5 + 2) = (1.5, -1.5).
        let y = [-3.0, 1.0];
        let fc = ForecastSet::new(vec![-2.5, -3.5]).with_var(vec![-2.0, -2.0]);
        let cfg = CcConfig {
            variant: CcVariant::Simple,
            side: Hypothesis::TwoSided,
        };
        let r = cc_test(&y, &fc, tau(0.5), cfg).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn simple_two_sided_by_hand() {
        let y = [-3.0, 1.0, 0.5, -0.2];
        let var = vec![-2.0, -2.0, -1.0, -1.0];
        let es = vec![-2.5, -2.5, -1.5, -1.5];
        let fc = ForecastSet::new(es.clone()).with_var(var.clone());
        let cfg = CcConfig {
            variant: CcVariant::Simple,
            side: Hypothesis::TwoSided,
        };
        let r = cc_test(&y, &fc, tau(0.25), cfg).unwrap();
        // Independent computation with explicit 2x2 algebra.
        let vs: Vec<[f64; 2]> = (0..4).map(|i| cc_identification(y[i], var[i], es[i], tau(0.25))).collect();
        let m = [vs.iter().map(|v| v[0]).sum::<f64>() / 4.0, vs.iter().map(|v| v[1]).sum::<f64>() / 4.0];
        let o = |a: usize, b: usize| vs.iter().map(|v| v[a] * v[b]).sum::<f64>() / 4.0;
        let det = o(0, 0) * o(1, 1) - o(0, 1) * o(0, 1);
        let quad = (o(1, 1) * m[0] * m[0] - 2.0 * o(0, 1) * m[0] * m[1] + o(0, 0) * m[1] * m[1]) / det;
        assert!((r.statistic - 4.0 * quad).abs() < 1e-10 * r.statistic.max(1.0));
        assert!((r.p_value - (-2.0 * quad).exp()).abs() < 1e-12);
    }

    #[test]
    fn one_sided_bonferroni() {
        let spec = GarchSpec::reference();
        let path = simulate_garch(&spec, 2000, 100, 5).unwrap();
        let fc = oracle_forecasts(&path, spec.law, tau(0.025));
        for variant in [CcVariant::Simple, CcVariant::General] {
            let cfg = CcConfig {
                variant,
                side: Hypothesis::OneSidedLess,
            };
            let r = cc_test(&path.returns, &fc, tau(0.025), cfg).unwrap();
            let q = r.diagnostics["moments"];
            let z_min = (1..=q as usize)
                .map(|j| r.diagnostics[&format!("z{j}")])
                .fold(f64::INFINITY, f64::min);
            assert_eq!(r.statistic, z_min);
            assert!((r.p_value - (q * normal_cdf(z_min)).min(1.0)).abs() < 1e-15);
        }
        // Halved (too small) risk forecasts push the moments negative.
        let bad = fc.scaled(0.5);
        let cfg = CcConfig {
            variant: CcVariant::Simple,
            side: Hypothesis::OneSidedLess,
        };
        assert!(cc_test(&path.returns, &bad, tau(0.025), cfg).unwrap().p_value < 0.01);
    }

    #[test]
    fn decision_invariant_to_scaling() {
        let spec = GarchSpec::reference();
        let path = simulate_garch(&spec, 1000, 100, 6).unwrap();
        let fc = oracle_forecasts(&path, spec.law, tau(0.025));
        let cfg = CcConfig {
            variant: CcVariant::Simple,
            side: Hypothesis::TwoSided,
        };
        let a = cc_test(&path.returns, &fc, tau(0.025), cfg).unwrap();
        let y10: Vec<f64> = path.returns.iter().map(|v| v * 10.0).collect();
        let b = cc_test(&y10, &fc.scaled(10.0), tau(0.025), cfg).unwrap();
        assert_eq!(a.rejects(0.05), b.rejects(0.05));
    }

    #[test]
    fn general_requires_sigma() {
        let fc = ForecastSet::new(vec![-1.0; 2]).with_var(vec![-0.5; 2]);
        let cfg = CcConfig {
            variant: CcVariant::General,
            side: Hypothesis::TwoSided,
        };
        assert_eq!(cc_test(&[0.0, 1.0], &fc, tau(0.1), cfg), Err(Error::MissingForecast("sigma")));
    }
}
