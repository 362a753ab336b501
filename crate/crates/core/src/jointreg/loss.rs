//! The 0-homogeneous joint loss for (quantile, ES) pairs.

use crate::error::{Error, Result};
use crate::types::ProbabilityLevel;

use super::Design;

/// Joint quantile/ES loss of one observation.
///
/// `(e - q + (q - y) 1{y <= q} / tau) / (-e) + ln(-e)`, defined for `e < 0`.
pub fn fz0_loss(y: f64, q: f64, e: f64, tau: ProbabilityLevel) -> Result<f64> {
    if e < 0.0 {
        Ok(fz0_unchecked(y, q, e, tau.value()))
    } else {
        Err(Error::InfeasibleEs(e))
    }
}

#[inline]
pub(crate) fn fz0_unchecked(y: f64, q: f64, e: f64, tau: f64) -> f64 {
    let hit = if y <= q { (q - y) / tau } else { 0.0 };
    (e - q + hit) / (-e) + (-e).ln()
}

/// Derivative of [`fz0_loss`] with respect to `e`.
#[inline]
pub fn fz0_loss_de(y: f64, q: f64, e: f64, tau: ProbabilityLevel) -> f64 {
    identification_es(y, q, e, tau.value()) / (e * e)
}

/// `e - q + (q - y) 1{y <= q} / tau`, the ES identification term.
#[inline]
pub(crate) fn identification_es(y: f64, q: f64, e: f64, tau: f64) -> f64 {
    let hit = if y <= q { (q - y) / tau } else { 0.0 };
    e - q + hit
}

/// Mean loss of the linear model `theta = (theta_q, theta_e)` over the rows of
/// `x`; `+inf` when some fitted ES is not negative.
pub fn average_loss(theta: &[f64], y: &[f64], x: &Design, tau: ProbabilityLevel) -> f64 {
    let k = x.k();
    assert_eq!(theta.len(), 2 * k, "theta must hold 2k coefficients");
    assert_eq!(y.len(), x.n(), "returns and design rows differ");
    split_loss(&theta[..k], &theta[k..], y, x, tau.value())
}

/// [`average_loss`] with the two coefficient blocks passed separately.
pub(crate) fn split_loss(tq: &[f64], te: &[f64], y: &[f64], x: &Design, tau: f64) -> f64 {
    let n = y.len();
    if n == 0 {
        return f64::INFINITY;
    }
    if let Some((j, slope)) = x.affine() {
        let (b, d) = if slope.is_empty() {
            (0.0, 0.0)
        } else {
            (te[1 - j], tq[1 - j])
        };
        return affine_loss(tq[j], d, te[j], b, y, slope, tau);
    }
    let mut linear = 0.0;
    let mut logs = LogSum::default();
    for (t, &yt) in y.iter().enumerate() {
        let row = x.row(t);
        let (q, e) = dot2(row, tq, te);
        if e >= 0.0 || e.is_nan() {
            return f64::INFINITY;
        }
        let hit = if yt <= q { (q - yt) / tau } else { 0.0 };
        linear += (e - q + hit) / (-e);
        logs.push(-e);
    }
    (linear + logs.finish()) / n as f64
}

/// Mean loss for `q_t = c + d x_t`, `e_t = a + b x_t` (`x` empty means
/// `x_t = 0`), written so the per-block work vectorizes.
fn affine_loss(c: f64, d: f64, a: f64, b: f64, y: &[f64], x: &[f64], tau: f64) -> f64 {
    const W: usize = 8;
    let inv_tau = 1.0 / tau;
    let mut linear = 0.0;
    let mut log_total = 0.0;
    let mut block = |ys: &[f64], xs: Option<&[f64]>| -> bool {
        let mut neg_e = [1.0; W];
        let mut terms = [0.0; W];
        for i in 0..ys.len() {
            let xt = xs.map_or(0.0, |xs| xs[i]);
            let q = c + d * xt;
            let e = a + b * xt;
            let hit = (q - ys[i]).max(0.0) * inv_tau;
            neg_e[i] = -e;
            terms[i] = (q - hit) / e;
        }
        let mut prod = 1.0;
        let mut feasible = true;
        for i in 0..W {
            feasible &= neg_e[i] > 0.0;
            prod *= neg_e[i];
            linear += terms[i];
        }
        log_total += if prod.is_normal() {
            prod.ln()
        } else {
            neg_e.iter().map(|v| v.ln()).sum()
        };
        feasible
    };
    let ok = if x.is_empty() {
        y.chunks(W).all(|ys| block(ys, None))
    } else {
        y.chunks(W).zip(x.chunks(W)).all(|(ys, xs)| block(ys, Some(xs)))
    };
    if !ok {
        return f64::INFINITY;
    }
    // Per row: (e - q + hit) / (-e) = -1 + (q - hit) / e.
    (linear + log_total) / y.len() as f64 - 1.0
}

#[inline]
pub(crate) fn dot2(row: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
    match row.len() {
        1 => (row[0] * a[0], row[0] * b[0]),
        2 => (row[0] * a[0] + row[1] * a[1], row[0] * b[0] + row[1] * b[1]),
        _ => row
            .iter()
            .zip(a.iter().zip(b))
            .fold((0.0, 0.0), |(p, q), (r, (x, y))| (p + r * x, q + r * y)),
    }
}

/// Sum of logarithms taking one `ln` per block of eight products.
#[derive(Default)]
struct LogSum {
    buf: [f64; 8],
    len: usize,
    total: f64,
}

impl LogSum {
    #[inline]
    fn push(&mut self, v: f64) {
        self.buf[self.len] = v;
        self.len += 1;
        if self.len == 8 {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let block = &self.buf[..self.len];
        let prod: f64 = block.iter().product();
        if prod.is_normal() {
            self.total += prod.ln();
        } else {
            self.total += block.iter().map(|v| v.ln()).sum::<f64>();
        }
        self.len = 0;
    }

    fn finish(mut self) -> f64 {
        self.flush();
        self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tau(t: f64) -> ProbabilityLevel {
        ProbabilityLevel::new(t).unwrap()
    }

    #[test]
    fn loss_examples() {
        let a = fz0_loss(-3.0, -2.0, -2.5, tau(0.025)).unwrap();
        assert!((a - (39.5 / 2.5 + 2.5f64.ln())).abs() < 1e-12);
        assert!((a - 16.716_290_731_874_155).abs() < 1e-12);
        let b = fz0_loss(1.0, -2.0, -2.5, tau(0.025)).unwrap();
        assert!((b - 0.716_290_731_874_155_1).abs() < 1e-12);
        assert_eq!(fz0_loss(5.0, -1.0, -1.0, tau(0.3)).unwrap(), 0.0);
        assert_eq!(fz0_loss(0.0, -1.0, 0.0, tau(0.3)), Err(Error::InfeasibleEs(0.0)));
    }

    #[test]
    fn average_loss_single_row_and_sentinel() {
        let x = Design::intercept_only(1);
        let l = average_loss(&[-2.0, -2.5], &[-3.0], &x, tau(0.025));
        assert_eq!(l, fz0_loss(-3.0, -2.0, -2.5, tau(0.025)).unwrap());

        let x = Design::with_intercept(&[1.0, -1.0]).unwrap();
        // Row 0 gives X'theta_e = -0.1 + 0.2 = 0.1 >= 0.
        assert_eq!(
            average_loss(&[0.0, 0.0, -0.1, 0.2], &[0.0, 0.0], &x, tau(0.1)),
            f64::INFINITY
        );
    }

    #[test]
    fn affine_path_matches_generic_rows() {
        let y: Vec<f64> = (0..53).map(|i| ((i * 37) % 11) as f64 - 6.0).collect();
        let es: Vec<f64> = (0..53).map(|i| -1.0 - (i % 5) as f64 * 0.4).collect();
        let ones = vec![1.0; 53];
        let affine = Design::from_columns(&[&es, &ones]).unwrap();
        let tq = [0.8, -0.3];
        let te = [1.1, -0.2];
        let fast = split_loss(&tq, &te, &y, &affine, 0.1);
        let direct: f64 = (0..53)
            .map(|t| fz0_loss(y[t], tq[0] * es[t] + tq[1], te[0] * es[t] + te[1], tau(0.1)).unwrap())
            .sum::<f64>()
            / 53.0;
        assert!((fast - direct).abs() < 1e-12 * direct.abs().max(1.0), "{fast} vs {direct}");
    }

    #[test]
    fn chunked_logs_match_direct_sum_on_extreme_scales() {
        let y: Vec<f64> = (0..37).map(|i| (i as f64 - 18.0) * 1e150).collect();
        let es: Vec<f64> = (0..37).map(|i| -1e150 * (1.0 + i as f64)).collect();
        let x = Design::with_intercept(&es).unwrap();
        let theta = [0.0, 0.5, 0.0, 1.0];
        let direct: f64 = y
            .iter()
            .zip(&es)
            .map(|(&yt, &e)| fz0_loss(yt, 0.5 * e, e, tau(0.1)).unwrap())
            .sum::<f64>()
            / 37.0;
        let fast = average_loss(&theta, &y, &x, tau(0.1));
        assert!((fast - direct).abs() < 1e-10 * direct.abs(), "{fast} vs {direct}");
    }

    proptest! {
        #[test]
        fn pointwise_scaling_identity(
            y in -10.0f64..10.0,
            q in -10.0f64..10.0,
            e in -10.0f64..-0.01,
            t in 0.001f64..0.999,
            c in 0.01f64..100.0,
        ) {
            let base = fz0_loss(y, q, e, tau(t)).unwrap();
            let scaled = fz0_loss(c * y, c * q, c * e, tau(t)).unwrap();
            prop_assert!((scaled - base - c.ln()).abs() < 1e-9 * (1.0 + base.abs()));
        }

        #[test]
        fn derivative_matches_central_differences(
            y in -10.0f64..10.0,
            q in -10.0f64..10.0,
            e in -10.0f64..-0.1,
            t in 0.01f64..0.5,
        ) {
            prop_assume!((y - q).abs() > 1e-3);
            let h = 1e-6;
            let f = |e: f64| fz0_loss(y, q, e, tau(t)).unwrap();
            let fd = (f(e + h) - f(e - h)) / (2.0 * h);
            let an = fz0_loss_de(y, q, e, tau(t));
            prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "fd {} an {}", fd, an);
        }
    }
}
