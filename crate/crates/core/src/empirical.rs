//! Empirical quantile and Expected Shortfall.
//!
//! The quantile is the left-continuous inverse of the empirical CDF (the
//! `ceil(tau * n)`-th order statistic, no interpolation). The ES is the mean
//! of all observations at or below that quantile.

use crate::error::{Error, Result};
use crate::types::ProbabilityLevel;

/// 1-based rank of the type-1 empirical `tau`-quantile in a sample of size `n`.
///
/// `tau * n` is snapped to the nearest integer when it is within rounding
/// noise of one, so that e.g. `0.025 * 2000` selects rank 50 and not 51.
pub(crate) fn quantile_rank(tau: f64, n: usize) -> usize {
    let x = tau * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
    (k as usize).clamp(1, n)
}

/// Type-1 empirical quantile; `scratch` is overwritten.
pub(crate) fn quantile_in_place(scratch: &mut [f64], tau: f64) -> f64 {
    let k = quantile_rank(tau, scratch.len());
    let (_, q, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    *q
}

/// Quantile, tail mean and tail size of `xs`, using `scratch` as workspace.
pub(crate) fn tail_summary(xs: &[f64], tau: f64, scratch: &mut Vec<f64>) -> (f64, f64, usize) {
    scratch.clear();
    scratch.extend_from_slice(xs);
    let q = quantile_in_place(scratch, tau);
    let (sum, count) = xs
        .iter()
        .filter(|&&x| x <= q)
        .fold((0.0, 0usize), |(s, c), &x| (s + x, c + 1));
    (q, sum / count as f64, count)
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for `n < 2`).
pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Empirical `tau`-quantile (type 1).
pub fn empirical_quantile(xs: &[f64], tau: ProbabilityLevel) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut scratch = xs.to_vec();
    Ok(quantile_in_place(&mut scratch, tau.value()))
}

/// Empirical `tau`-ES: mean of the observations `<=` the empirical quantile.
pub fn empirical_es(xs: &[f64], tau: ProbabilityLevel) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (_, es, count) = tail_summary(xs, tau.value(), &mut Vec::with_capacity(xs.len()));
    if count == 0 {
        // The quantile is itself a sample point, so this cannot happen for
        // finite data.
        return Err(Error::EmptyTail);
    }
    Ok(es)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tau(t: f64) -> ProbabilityLevel {
        ProbabilityLevel::new(t).unwrap()
    }

    /// Sort-based reference used only by the tests.
    fn oracle_quantile(xs: &[f64], t: f64) -> f64 {
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        let k = (t * xs.len() as f64 - 1e-12).ceil().max(1.0) as usize;
        s[k - 1]
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(
            empirical_quantile(&[-5.0, -3.0, -1.0, 0.0, 2.0], tau(0.4)).unwrap(),
            -3.0
        );
        assert_eq!(empirical_quantile(&[7.0], tau(0.025)).unwrap(), 7.0);
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], tau(0.5)).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&[], tau(0.5)), Err(Error::EmptyInput));
    }

    #[test]
    fn es_examples() {
        assert_eq!(
            empirical_es(&[-5.0, -3.0, -1.0, 0.0, 2.0], tau(0.4)).unwrap(),
            -4.0
        );
        assert_eq!(empirical_es(&[1.5; 4], tau(0.3)).unwrap(), 1.5);
        let mut xs = vec![0.0; 10];
        xs[0] = -10.0;
        assert_eq!(empirical_es(&xs, tau(0.1)).unwrap(), -10.0);
        assert_eq!(empirical_es(&[], tau(0.1)), Err(Error::EmptyInput));
    }

    #[test]
    fn mean_sd_small_samples() {
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rank_snaps_rounding_noise() {
        assert_eq!(quantile_rank(0.025, 2000), 50);
        assert_eq!(quantile_rank(0.025, 2500), 63);
        assert_eq!(quantile_rank(0.1, 10), 1);
        assert_eq!(quantile_rank(0.001, 10), 1);
    }

    proptest! {
        #[test]
        fn quantile_matches_sort_oracle(
            xs in prop::collection::vec(-100.0f64..100.0, 1..200),
            t in 0.001f64..0.999,
        ) {
            prop_assert_eq!(empirical_quantile(&xs, tau(t)).unwrap(), oracle_quantile(&xs, t));
        }

        #[test]
        fn equivariance_and_tail_bound(
            xs in prop::collection::vec(-100.0f64..100.0, 1..200),
            t in 0.01f64..0.99,
            a in -50.0f64..50.0,
            b in 0.1f64..10.0,
        ) {
            let q = empirical_quantile(&xs, tau(t)).unwrap();
            let es = empirical_es(&xs, tau(t)).unwrap();
            prop_assert!(es <= q);
            let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
            let qy = empirical_quantile(&ys, tau(t)).unwrap();
            let esy = empirical_es(&ys, tau(t)).unwrap();
            prop_assert!((qy - (a + b * q)).abs() <= 1e-9 * (1.0 + qy.abs()));
            prop_assert!((esy - (a + b * es)).abs() <= 1e-9 * (1.0 + esy.abs()));
        }

        #[test]
        fn permutation_invariance(
            xs in prop::collection::vec(-100.0f64..100.0, 1..100),
            t in 0.01f64..0.99,
        ) {
            let mut rev = xs.clone();
            rev.reverse();
            prop_assert_eq!(
                empirical_quantile(&xs, tau(t)).unwrap(),
                empirical_quantile(&rev, tau(t)).unwrap()
            );
            let a = empirical_es(&xs, tau(t)).unwrap();
            let b = empirical_es(&rev, tau(t)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
