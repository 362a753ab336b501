//! Size adjustment, ROC curves and partial AUC.
//!
//! Statistics are on the "larger rejects" scale of
//! [`TestReport::score`](crate::TestReport::score).

use serde::Serialize;

use crate::empirical::quantile_in_place;
use crate::error::{Error, Result};

/// Piecewise-linear curve of `(empirical size, power)` points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCurve {
    points: Vec<(f64, f64)>,
}

impl PowerCurve {
    /// Points must be sorted by size, with nondecreasing power, inside the
    /// unit square.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        for (i, &(s, p)) in points.iter().enumerate() {
            if !inside(s) || !inside(p) {
                return Err(Error::InvalidParameter(format!(
                    "curve point {i} = ({s}, {p}) is outside the unit square"
                )));
            }
            if i > 0 {
                let (s0, p0) = points[i - 1];
                if s < s0 || p < p0 {
                    return Err(Error::InvalidParameter(format!(
                        "curve point {i} decreases in size or power"
                    )));
                }
            }
        }
        Ok(Self { points })
    }

    /// The diagonal from `(0, 0)` to `(1, 1)`.
    pub fn diagonal() -> Self {
        Self {
            points: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Power at size `s` by linear interpolation (the upper value on
    /// vertical segments).
    pub fn power_at(&self, s: f64) -> Option<f64> {
        let pts = &self.points;
        if s < pts[0].0 || s > pts[pts.len() - 1].0 {
            return None;
        }
        let i = pts.partition_point(|&(x, _)| x <= s);
        if i == 0 {
            return Some(pts[0].1);
        }
        let (x0, y0) = pts[i - 1];
        if i == pts.len() || x0 == s {
            return Some(y0);
        }
        let (x1, y1) = pts[i];
        Some(y0 + (y1 - y0) * (s - x0) / (x1 - x0))
    }
}

fn check_nonempty(null: &[f64], alt: &[f64]) -> Result<()> {
    if null.is_empty() || alt.is_empty() {
        Err(Error::EmptyInput)
    } else {
        Ok(())
    }
}

fn share_above(xs: &[f64], c: f64) -> f64 {
    xs.iter().filter(|&&x| x > c).count() as f64 / xs.len() as f64
}

/// Critical value at which the null statistics reject at rate `nominal`:
/// their type-1 empirical `(1 - nominal)`-quantile.
pub fn size_adjusted_critical_value(null: &[f64], nominal: f64) -> Result<f64> {
    if null.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(nominal > 0.0 && nominal < 1.0) {
        return Err(Error::InvalidProbability(nominal));
    }
    let mut scratch = null.to_vec();
    Ok(quantile_in_place(&mut scratch, 1.0 - nominal))
}

/// Share of alternative statistics above the size-adjusted critical value.
pub fn size_adjusted_power(null: &[f64], alt: &[f64], nominal: f64) -> Result<f64> {
    check_nonempty(null, alt)?;
    let c = size_adjusted_critical_value(null, nominal)?;
    Ok(share_above(alt, c))
}

/// ROC curve: `(share of null above c, share of alternative above c)` for
/// `c` running from `+inf` through every distinct null statistic to `-inf`.
pub fn roc_curve(null: &[f64], alt: &[f64]) -> Result<PowerCurve> {
    check_nonempty(null, alt)?;
    if null.iter().chain(alt).any(|v| v.is_nan()) {
        return Err(Error::NonFinite {
            what: "statistics",
            index: 0,
        });
    }
    let mut n_sorted = null.to_vec();
    let mut a_sorted = alt.to_vec();
    n_sorted.sort_by(|a, b| b.total_cmp(a));
    a_sorted.sort_by(|a, b| b.total_cmp(a));
    let (n, m) = (n_sorted.len() as f64, a_sorted.len() as f64);

    let mut points = Vec::with_capacity(n_sorted.len() + 2);
    points.push((0.0, 0.0));
    let (mut i, mut j) = (0, 0);
    while i < n_sorted.len() {
        let c = n_sorted[i];
        // Counts strictly above c.
        while j < a_sorted.len() && a_sorted[j] > c {
            j += 1;
        }
        points.push((i as f64 / n, j as f64 / m));
        while i < n_sorted.len() && n_sorted[i] == c {
            i += 1;
        }
    }
    points.push((1.0, 1.0));
    PowerCurve::new(points)
}

/// Trapezoidal area under `curve` for sizes in `[lo, hi]` (not divided by
/// the width of the range).
pub fn pauc(curve: &PowerCurve, lo: f64, hi: f64) -> Result<f64> {
    let pts = curve.points();
    let first = pts[0].0;
    let last = pts[pts.len() - 1].0;
    if !(lo < hi) || first > lo || last < hi {
        return Err(Error::CurveDoesNotSpanRange { lo, hi });
    }
    let mut area = 0.0;
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        let a = x0.max(lo);
        let b = x1.min(hi);
        if b <= a {
            continue;
        }
        let at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        area += 0.5 * (at(a) + at(b)) * (b - a);
    }
    Ok(area)
}
