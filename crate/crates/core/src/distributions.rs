//! Innovation laws of the location-scale simulators: the standard normal and
//! the Student-t rescaled to unit variance.
//!
//! A standardized t variate with `nu > 2` degrees of freedom is
//! `sqrt((nu - 2) / nu) * T_nu`, so its quantile and ES are the classical
//! ones times that factor.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{
    ln_gamma, normal_cdf, normal_pdf, normal_quantile, student_t_cdf, student_t_pdf,
    student_t_quantile,
};
use crate::types::ProbabilityLevel;

/// Zero-mean, unit-variance innovation distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationLaw {
    StandardNormal,
    StandardizedT { nu: f64 },
}

impl InnovationLaw {
    /// Standardized Student-t; `nu = +inf` gives the normal limit.
    pub fn student_t(nu: f64) -> Result<Self> {
        if nu.is_infinite() && nu > 0.0 {
            Ok(Self::StandardNormal)
        } else if nu > 2.0 {
            Ok(Self::StandardizedT { nu })
        } else {
            Err(Error::InvalidParameter(format!(
                "standardized t needs nu > 2, got {nu}"
            )))
        }
    }

    /// Degrees of freedom (`inf` for the normal law).
    pub fn nu(&self) -> f64 {
        match *self {
            Self::StandardNormal => f64::INFINITY,
            Self::StandardizedT { nu } => nu,
        }
    }

    fn t_scale(nu: f64) -> f64 {
        ((nu - 2.0) / nu).sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::StandardNormal => normal_pdf(x),
            Self::StandardizedT { nu } => {
                let s = Self::t_scale(nu);
                student_t_pdf(x / s, nu) / s
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::StandardNormal => normal_cdf(x),
            Self::StandardizedT { nu } => student_t_cdf(x / Self::t_scale(nu), nu),
        }
    }

    /// `q` with `P(Z <= q) = tau`.
    pub fn quantile(&self, tau: ProbabilityLevel) -> f64 {
        let p = tau.value();
        match *self {
            Self::StandardNormal => normal_quantile(p),
            Self::StandardizedT { nu } => Self::t_scale(nu) * student_t_quantile(p, nu),
        }
    }

    /// `(1 / tau) * integral_0^tau quantile(s) ds`, in closed form.
    pub fn es(&self, tau: ProbabilityLevel) -> f64 {
        let p = tau.value();
        match *self {
            Self::StandardNormal => -normal_pdf(normal_quantile(p)) / p,
            Self::StandardizedT { nu } => {
                let t = student_t_quantile(p, nu);
                -Self::t_scale(nu) * student_t_pdf(t, nu) * (nu + t * t) / ((nu - 1.0) * p)
            }
        }
    }

    /// `E|Z|`, needed to centre the EGARCH magnitude term.
    pub fn abs_moment(&self) -> f64 {
        match *self {
            Self::StandardNormal => (2.0 / PI).sqrt(),
            Self::StandardizedT { nu } => {
                let ln_ratio = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu);
                2.0 * (nu - 2.0).sqrt() * ln_ratio.exp() / (PI.sqrt() * (nu - 1.0))
            }
        }
    }

    /// One draw. Prefer [`InnovationLaw::sampler`] in loops.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().draw(rng)
    }

    pub fn sampler(&self) -> InnovationSampler {
        match *self {
            Self::StandardNormal => InnovationSampler::Normal,
            Self::StandardizedT { nu } => InnovationSampler::T {
                dist: StudentT::new(nu).expect("nu > 2 checked at construction"),
                scale: Self::t_scale(nu),
            },
        }
    }
}

/// Pre-built sampler for an [`InnovationLaw`].
#[derive(Debug, Clone, Copy)]
pub enum InnovationSampler {
    Normal,
    T { dist: StudentT<f64>, scale: f64 },
}

impl InnovationSampler {
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal => StandardNormal.sample(rng),
            Self::T { dist, scale } => scale * dist.sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

    fn tau(t: f64) -> ProbabilityLevel {
        ProbabilityLevel::new(t).unwrap()
    }

    fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if f(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Trapezoid rule on [0, 1] with `n` intervals.
    fn trapezoid(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
        h * (0.5 * f(0.0) + inner + 0.5 * f(1.0))
    }

    /// `integral_{-inf}^{upper} g(x) dx` via `x = upper - u / (1 - u)`.
    fn integrate_left_tail(g: impl Fn(f64) -> f64, upper: f64, n: usize) -> f64 {
        trapezoid(
            |u| {
                if u >= 1.0 {
                    return 0.0;
                }
                let w = u / (1.0 - u);
                g(upper - w) / ((1.0 - u) * (1.0 - u))
            },
            n,
        )
    }

    #[test]
    fn normal_quantile_examples() {
        let n = InnovationLaw::StandardNormal;
        assert_eq!(n.quantile(tau(0.5)), 0.0);
        let reference = Normal::standard();
        let q = bisect(|x| reference.cdf(x), 0.025, -10.0, 10.0, 1e-12);
        assert!((n.quantile(tau(0.025)) - q).abs() < 1e-9);
        assert!((n.quantile(tau(0.025)) - (-1.959964)).abs() < 1e-6);
    }

    #[test]
    fn standardized_t_quantile_matches_bisection_oracle() {
        let law = InnovationLaw::student_t(5.0).unwrap();
        let classical = StudentsT::new(0.0, 1.0, 5.0).unwrap();
        let t = bisect(|x| classical.cdf(x), 0.025, -50.0, 50.0, 1e-13);
        let expected = (3.0f64 / 5.0).sqrt() * t;
        assert!((law.quantile(tau(0.025)) - expected).abs() < 1e-9);
        // Frozen oracle value.
        assert!((law.quantile(tau(0.025)) - (-1.991_164_127_896_548)).abs() < 1e-9);
        let calibrated = InnovationLaw::student_t(7.24).unwrap();
        assert!((calibrated.quantile(tau(0.025)) - (-1.998_238_423_769_981)).abs() < 1e-9);
    }

    #[test]
    fn normal_es_matches_quantile_integration() {
        let law = InnovationLaw::StandardNormal;
        let reference = Normal::standard();
        let p = 0.025;
        // s = p * u^2 removes the singularity of the quantile at 0.
        let integral = trapezoid(
            |u| {
                if u == 0.0 {
                    0.0
                } else {
                    reference.inverse_cdf(p * u * u) * 2.0 * p * u
                }
            },
            1_000_000,
        );
        let es = law.es(tau(p));
        assert!(((integral / p) - es).abs() <= 1e-6 * es.abs(), "{} vs {es}", integral / p);
        assert!((es - (-2.337_802_792_201_413)).abs() < 1e-9);
    }

    #[test]
    fn t_es_matches_tail_integration() {
        for (nu, frozen) in [(5.0, -2.727_802_071_641_672), (7.24, -2.599_088_060_868_909)] {
            let law = InnovationLaw::student_t(nu).unwrap();
            let s = ((nu - 2.0) / nu).sqrt();
            let classical = StudentsT::new(0.0, s, nu).unwrap();
            let p = 0.025;
            let q = bisect(|x| classical.cdf(x), p, -50.0, 50.0, 1e-13);
            let integral = integrate_left_tail(|x| x * classical.pdf(x), q, 1_000_000);
            let es = law.es(tau(p));
            assert!(((integral / p) - es).abs() <= 1e-6 * es.abs(), "nu={nu}");
            assert!((es - frozen).abs() < 1e-9, "nu={nu}");
        }
    }

    #[test]
    fn es_at_level_near_one_is_the_mean() {
        for law in [InnovationLaw::StandardNormal, InnovationLaw::student_t(5.0).unwrap()] {
            assert!(law.es(tau(1.0 - 1e-12)).abs() < 1e-6);
        }
    }

    #[test]
    fn monotone_and_symmetric() {
        for law in [
            InnovationLaw::StandardNormal,
            InnovationLaw::student_t(3.5).unwrap(),
            InnovationLaw::student_t(7.24).unwrap(),
        ] {
            let mut prev_q = f64::NEG_INFINITY;
            let mut prev_es = f64::NEG_INFINITY;
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let q = law.quantile(tau(p));
                let es = law.es(tau(p));
                assert!(q > prev_q && es > prev_es && es < q, "{law:?} p={p}");
                assert!((q + law.quantile(tau(1.0 - p))).abs() < 1e-9);
                prev_q = q;
                prev_es = es;
            }
        }
    }

    #[test]
    fn unit_variance_by_integration() {
        for law in [
            InnovationLaw::StandardNormal,
            InnovationLaw::student_t(5.0).unwrap(),
            InnovationLaw::student_t(7.24).unwrap(),
        ] {
            // Symmetric law: Var = 2 * integral_{-inf}^0 x^2 f(x) dx.
            let half = integrate_left_tail(|x| x * x * law.pdf(x), 0.0, 1_000_000);
            assert!((2.0 * half - 1.0).abs() < 1e-6, "{law:?}: {}", 2.0 * half);
        }
    }

    #[test]
    fn abs_moment_closed_forms() {
        let n = InnovationLaw::StandardNormal.abs_moment();
        assert!((n - 0.797_884_6).abs() < 1e-7);
        let big = InnovationLaw::student_t(1e6).unwrap().abs_moment();
        assert!((big - n).abs() < 1e-6);
        assert!((InnovationLaw::student_t(5.0).unwrap().abs_moment() - 0.735_105_193_895_722_6).abs() < 1e-12);
    }

    #[test]
    fn abs_moment_matches_monte_carlo() {
        let law = InnovationLaw::student_t(7.24).unwrap();
        let sampler = law.sampler();
        let mut rng = rng_from_seed(11);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let a = sampler.draw(&mut rng).abs();
            s += a;
            s2 += a * a;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - law.abs_moment()).abs() < 3.0 * se);
    }

    #[test]
    fn sampling_is_deterministic_and_standardized() {
        let law = InnovationLaw::student_t(5.0).unwrap();
        assert_eq!(law.sample(&mut rng_from_seed(3)), law.sample(&mut rng_from_seed(3)));

        let n = 1_000_000;
        let sampler = law.sampler();
        let mut rng = rng_from_seed(5);
        let draws: Vec<f64> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.99..=1.01).contains(&var), "{var}");

        let normal = InnovationLaw::StandardNormal.sampler();
        let mut rng = rng_from_seed(6);
        let mean = (0..n).map(|_| normal.draw(&mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.004, "{mean}");
    }

    #[test]
    fn infinite_nu_is_normal() {
        assert_eq!(
            InnovationLaw::student_t(f64::INFINITY).unwrap(),
            InnovationLaw::StandardNormal
        );
        assert!(InnovationLaw::student_t(2.0).is_err());
    }
}
