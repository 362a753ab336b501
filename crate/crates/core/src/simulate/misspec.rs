//! Continuous misspecification of the GARCH(1,1) forecasting model.
//!
//! Each design moves one feature of the forecaster's model away from the
//! data-generating spec while holding the others fixed.

use serde::{Deserialize, Serialize};

use crate::distributions::InnovationLaw;
use crate::error::{Error, Result};
use crate::types::ProbabilityLevel;

use super::GarchSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MisspecKind {
    /// ARCH coefficient, with the persistence held at its true value.
    ArchReaction,
    /// Unconditional variance, via the constant term.
    UncondVariance,
    /// Persistence `gamma1 + gamma2`, scaling both coefficients and holding
    /// the unconditional variance.
    Persistence,
    /// Degrees of freedom of the standardized t law (`inf` is normal).
    DegreesOfFreedom,
    /// Probability level used to build the forecasts.
    ProbabilityLevel,
}

impl MisspecKind {
    pub const ALL: [MisspecKind; 5] = [
        MisspecKind::ArchReaction,
        MisspecKind::UncondVariance,
        MisspecKind::Persistence,
        MisspecKind::DegreesOfFreedom,
        MisspecKind::ProbabilityLevel,
    ];

    /// Admissible values of the design parameter.
    pub fn range(self) -> (f64, f64) {
        match self {
            MisspecKind::ArchReaction => (0.03, 0.2),
            MisspecKind::UncondVariance => (0.01, 0.5),
            MisspecKind::Persistence => (0.9, 0.999),
            MisspecKind::DegreesOfFreedom => (3.0, f64::INFINITY),
            MisspecKind::ProbabilityLevel => (0.005, 0.05),
        }
    }

    /// Design value reproducing the true model.
    pub fn true_value(self, base: &GarchSpec, tau: ProbabilityLevel) -> f64 {
        match self {
            MisspecKind::ArchReaction => base.gamma1,
            MisspecKind::UncondVariance => base.unconditional_variance(),
            MisspecKind::Persistence => base.persistence(),
            MisspecKind::DegreesOfFreedom => base.law.nu(),
            MisspecKind::ProbabilityLevel => tau.value(),
        }
    }

    /// `points` evenly spaced values over the range plus the true value.
    ///
    /// Degrees of freedom are spaced evenly in `1 / nu` over `[0, 1/3]`, so
    /// the grid reaches the normal limit.
    pub fn grid(self, points: usize, base: &GarchSpec, tau: ProbabilityLevel) -> Vec<f64> {
        let points = points.max(2);
        let (lo, hi) = self.range();
        let mut grid: Vec<f64> = match self {
            MisspecKind::DegreesOfFreedom => (0..points)
                .map(|i| {
                    let inv = (1.0 / lo) * i as f64 / (points - 1) as f64;
                    if i == 0 {
                        f64::INFINITY
                    } else if i == points - 1 {
                        lo
                    } else {
                        1.0 / inv
                    }
                })
                .collect(),
            _ => (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect(),
        };
        let truth = self.true_value(base, tau);
        let close = |a: f64, b: f64| {
            a == b || (a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-9 * a.abs().max(b.abs()))
        };
        if !grid.iter().any(|&g| close(g, truth)) {
            grid.push(truth);
        }
        for g in grid.iter_mut() {
            if close(*g, truth) {
                *g = truth;
            }
        }
        grid.sort_by(f64::total_cmp);
        grid
    }
}

/// One point of a misspecification sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisspecDesign {
    pub kind: MisspecKind,
    pub value: f64,
}

impl MisspecDesign {
    pub fn new(kind: MisspecKind, value: f64) -> Result<Self> {
        let (lo, hi) = kind.range();
        let tol = 1e-12 * hi.min(1e3);
        if value.is_nan() || value < lo - tol || value > hi + tol {
            return Err(Error::OutOfRange {
                what: "misspecification value",
                value,
                lo,
                hi,
            });
        }
        Ok(Self { kind, value })
    }
}

/// Forecasting spec and probability level implied by a design.
pub fn apply_misspec(
    base: &GarchSpec,
    design: MisspecDesign,
    tau: ProbabilityLevel,
) -> Result<(GarchSpec, ProbabilityLevel)> {
    let d = MisspecDesign::new(design.kind, design.value)?;
    let v = d.value;
    let mut spec = *base;
    let mut level = tau;
    match d.kind {
        MisspecKind::ArchReaction => {
            spec.gamma2 = base.persistence() - v;
            spec.gamma1 = v;
        }
        MisspecKind::UncondVariance => {
            spec.gamma0 = v * (1.0 - base.persistence());
        }
        MisspecKind::Persistence => {
            let c = v / base.persistence();
            spec.gamma1 = c * base.gamma1;
            spec.gamma2 = c * base.gamma2;
            spec.gamma0 = base.unconditional_variance() * (1.0 - v);
        }
        MisspecKind::DegreesOfFreedom => {
            spec.law = InnovationLaw::student_t(v)?;
        }
        MisspecKind::ProbabilityLevel => {
            level = ProbabilityLevel::new(v)?;
        }
    }
    spec.validate()?;
    Ok((spec, level))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(kind: MisspecKind, value: f64) -> MisspecDesign {
        MisspecDesign::new(kind, value).unwrap()
    }

    #[test]
    fn true_points_are_fixed_points() {
        let base = GarchSpec::reference();
        let tau = ProbabilityLevel::BASEL;
        for kind in MisspecKind::ALL {
            let (spec, level) = apply_misspec(&base, design(kind, kind.true_value(&base, tau)), tau).unwrap();
            assert!((spec.gamma0 - base.gamma0).abs() < 1e-15, "{kind:?}");
            assert!((spec.gamma1 - base.gamma1).abs() < 1e-15, "{kind:?}");
            assert!((spec.gamma2 - base.gamma2).abs() < 1e-15, "{kind:?}");
            assert_eq!(spec.law, base.law);
            assert_eq!(level, tau);
        }
    }

    #[test]
    fn mappings() {
        let base = GarchSpec::reference();
        let tau = ProbabilityLevel::BASEL;
        let (s, _) = apply_misspec(&base, design(MisspecKind::ArchReaction, 0.2), tau).unwrap();
        assert!((s.gamma1 - 0.2).abs() < 1e-15 && (s.gamma2 - 0.75).abs() < 1e-12);

        let (s, _) = apply_misspec(&base, design(MisspecKind::UncondVariance, 0.5), tau).unwrap();
        assert!((s.unconditional_variance() - 0.5).abs() < 1e-12);

        let (s, _) = apply_misspec(&base, design(MisspecKind::Persistence, 0.999), tau).unwrap();
        assert!((s.persistence() - 0.999).abs() < 1e-12);
        assert!((s.unconditional_variance() - 0.2).abs() < 1e-9);
        assert!((s.gamma1 / s.gamma2 - 0.1 / 0.85).abs() < 1e-12);

        let (s, _) = apply_misspec(&base, design(MisspecKind::DegreesOfFreedom, f64::INFINITY), tau).unwrap();
        assert_eq!(s.law, InnovationLaw::StandardNormal);

        let (s, l) = apply_misspec(&base, design(MisspecKind::ProbabilityLevel, 0.005), tau).unwrap();
        assert_eq!(s, base);
        assert_eq!(l.value(), 0.005);
    }

    #[test]
    fn out_of_range_values_fail() {
        assert!(matches!(
            MisspecDesign::new(MisspecKind::ArchReaction, 0.5),
            Err(Error::OutOfRange { .. })
        ));
        assert!(MisspecDesign::new(MisspecKind::DegreesOfFreedom, 2.5).is_err());
        assert!(MisspecDesign::new(MisspecKind::UncondVariance, f64::NAN).is_err());
    }

    #[test]
    fn grids_contain_truth_and_span_range() {
        let base = GarchSpec::reference();
        let tau = ProbabilityLevel::BASEL;
        for kind in MisspecKind::ALL {
            let g = kind.grid(21, &base, tau);
            let (lo, hi) = kind.range();
            assert_eq!(g[0], lo, "{kind:?}");
            assert_eq!(*g.last().unwrap(), hi, "{kind:?}");
            assert!(g.contains(&kind.true_value(&base, tau)), "{kind:?}");
            assert!(g.windows(2).all(|w| w[0] < w[1]), "{kind:?}");
            assert!(g.len() == 21 || g.len() == 22);
        }
    }
}
