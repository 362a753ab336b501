//! Sandwich covariance of the joint regression estimator.
//!
//! Both nuisance quantities are estimated under a location-scale view of the
//! data: quantile residuals are standardized by the fitted ES magnitude and
//! pooled across days. The density at the quantile comes from a Gaussian
//! kernel with a Hall–Sheather bandwidth, and the truncated tail variance
//! from the sample variance of the standardized exceedances.

use nalgebra::DMatrix;

use crate::empirical::{mean_sd, quantile_in_place};
use crate::error::{Error, Result};
use crate::special::{normal_pdf, normal_quantile};
use crate::types::ProbabilityLevel;

use super::loss::dot2;
use super::{Design, JointFit};

/// Per-day nuisance estimates entering the covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityEstimate {
    /// Conditional density of the return at the fitted quantile.
    pub density_at_quantile: Vec<f64>,
    /// Conditional variance of the return below the fitted quantile.
    pub truncated_variance: Vec<f64>,
}

/// Hall–Sheather bandwidth on the probability scale, capped so that
/// `tau +- h` stays inside `(0, 1)`.
pub(crate) fn hall_sheather(n: usize, tau: f64) -> f64 {
    let z = normal_quantile(0.975);
    let qz = normal_quantile(tau);
    let d = normal_pdf(qz);
    let h = (n as f64).powf(-1.0 / 3.0)
        * z.powf(2.0 / 3.0)
        * (1.5 * d * d / (2.0 * qz * qz + 1.0)).powf(1.0 / 3.0);
    h.min(0.5 * tau.min(1.0 - tau))
}

/// Gaussian-kernel density of `r` at zero with the bandwidth converted from
/// probability to residual units.
fn kernel_density_at_zero(r: &[f64], tau: f64) -> f64 {
    let n = r.len();
    let hp = hall_sheather(n, tau);
    let (_, sd) = mean_sd(r);
    let mut scratch = r.to_vec();
    let q75 = quantile_in_place(&mut scratch, 0.75);
    let q25 = quantile_in_place(&mut scratch, 0.25);
    let iqr = (q75 - q25) / 1.34;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    let h = (normal_quantile(tau + hp) - normal_quantile(tau - hp)) * spread;
    if !(h > 0.0) {
        return 0.0;
    }
    r.iter().map(|v| normal_pdf(v / h)).sum::<f64>() / (n as f64 * h)
}

/// Density and truncated-variance estimates at a fitted point.
pub fn sparsity_estimate(
    fit: &JointFit,
    y: &[f64],
    x: &Design,
    tau: ProbabilityLevel,
) -> Result<SparsityEstimate> {
    let t = tau.value();
    let n = x.n();
    let mut std_res = Vec::with_capacity(n);
    let mut exceed = Vec::new();
    let mut abs_e = Vec::with_capacity(n);
    for i in 0..n {
        let (q, e) = dot2(x.row(i), &fit.theta_q, &fit.theta_e);
        if e >= 0.0 {
            return Err(Error::InfeasibleEs(e));
        }
        let r = (y[i] - q) / -e;
        std_res.push(r);
        if y[i] <= q {
            exceed.push(r);
        }
        abs_e.push(-e);
    }
    let f0 = kernel_density_at_zero(&std_res, t);
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(Error::SingularLambda);
    }
    let (_, sd_exc) = mean_sd(&exceed);
    let var_exc = if exceed.len() >= 2 { sd_exc * sd_exc } else { 0.0 };
    Ok(SparsityEstimate {
        density_at_quantile: abs_e.iter().map(|a| f0 / a).collect(),
        truncated_variance: abs_e.iter().map(|a| a * a * var_exc).collect(),
    })
}

/// Attaches `cov_full` and `cov_ee` to `fit`.
///
/// The covariance is `(1/T) L^-1 C L^-1` with the block-diagonal
/// Hessian `L` and score outer product `C` replaced by plug-in sample
/// averages.
pub fn estimate_covariance(
    mut fit: JointFit,
    y: &[f64],
    x: &Design,
    tau: ProbabilityLevel,
) -> Result<JointFit> {
    let t = tau.value();
    let n = x.n();
    let k = x.k();
    let sp = sparsity_estimate(&fit, y, x, tau)?;

    let mut l11 = DMatrix::<f64>::zeros(k, k);
    let mut l22 = DMatrix::<f64>::zeros(k, k);
    let mut c12 = DMatrix::<f64>::zeros(k, k);
    let mut c22 = DMatrix::<f64>::zeros(k, k);
    let odds = (1.0 - t) / t;
    for i in 0..n {
        let row = x.row(i);
        let (q, e) = dot2(row, &fit.theta_q, &fit.theta_e);
        let e2 = e * e;
        let w11 = -sp.density_at_quantile[i] / (t * e);
        let w22 = 1.0 / e2;
        let w12 = -odds * (q - e) / (e2 * e);
        let wc22 = (sp.truncated_variance[i] / t + odds * (q - e) * (q - e)) / (e2 * e2);
        for a in 0..k {
            for b in 0..k {
                let xx = row[a] * row[b];
                l11[(a, b)] += w11 * xx;
                l22[(a, b)] += w22 * xx;
                c12[(a, b)] += w12 * xx;
                c22[(a, b)] += wc22 * xx;
            }
        }
    }
    let nf = n as f64;
    l11 /= nf;
    l22 /= nf;
    c12 /= nf;
    c22 /= nf;
    let c11 = &l22 * odds;

    let l11_inv = l11.try_inverse().ok_or(Error::SingularLambda)?;
    let l22_inv = l22.try_inverse().ok_or(Error::SingularLambda)?;
    if l11_inv.iter().chain(l22_inv.iter()).any(|v| !v.is_finite()) {
        return Err(Error::SingularLambda);
    }

    let b11 = &l11_inv * &c11 * &l11_inv / nf;
    let b12 = &l11_inv * &c12 * &l22_inv / nf;
    let b22 = &l22_inv * &c22 * &l22_inv / nf;
    let mut full = DMatrix::<f64>::zeros(2 * k, 2 * k);
    full.view_mut((0, 0), (k, k)).copy_from(&b11);
    full.view_mut((0, k), (k, k)).copy_from(&b12);
    full.view_mut((k, 0), (k, k)).copy_from(&b12.transpose());
    full.view_mut((k, k), (k, k)).copy_from(&b22);
    let full = (&full + full.transpose()) * 0.5;
    fit.cov_ee = Some(full.view((k, k), (k, k)).into_owned());
    fit.cov_full = Some(full);
    Ok(fit)
}
