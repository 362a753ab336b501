//! M-estimation of the joint quantile/ES regression.
//!
//! The loss is minimized by Nelder–Mead in coordinates normalized by the
//! scale of the data, so fits are equivariant under rescaling of the
//! returns. Each simplex run is followed by a polish: the quantile
//! coefficients are snapped to the basic solution through the `k`
//! observations closest to the fitted quantile, and the ES coefficients
//! (on which the loss is smooth for fixed quantile coefficients) are refined
//! by Newton steps.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::empirical::{mean_sd, quantile_in_place, tail_summary};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rng::rng_from_seed;
use crate::types::ProbabilityLevel;

use super::loss::{dot2, identification_es, split_loss};
use super::Design;

/// Fitted joint regression.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFit {
    pub theta_q: Vec<f64>,
    pub theta_e: Vec<f64>,
    /// Attained average loss.
    pub loss: f64,
    /// Covariance of `theta_e` (already divided by `T`), once estimated.
    pub cov_ee: Option<DMatrix<f64>>,
    /// Covariance of `(theta_q, theta_e)`, once estimated.
    pub cov_full: Option<DMatrix<f64>>,
    pub converged: bool,
    /// Number of simplex runs performed.
    pub n_restarts: usize,
}

/// Tuning of [`fit_joint_with`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Maximum number of simplex runs.
    pub restarts: usize,
    /// Relative jitter applied to the best point before each restart.
    pub jitter: f64,
    /// Initial simplex edge in normalized coordinates.
    pub initial_step: f64,
    /// Simplex diameter (normalized coordinates) at which a run stops.
    pub simplex_tol: f64,
    /// Starting point `(theta_q, theta_e)` tried before the default starts.
    pub warm_start: Option<(Vec<f64>, Vec<f64>)>,
    /// Seed of the restart jitter.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            jitter: 0.05,
            initial_step: 0.1,
            simplex_tol: 1e-8,
            warm_start: None,
            seed: 0x5eed,
        }
    }
}

impl FitOptions {
    /// Settings for refits on resampled data that start at a known solution.
    pub fn warm(theta_q: &[f64], theta_e: &[f64]) -> Self {
        Self {
            restarts: 1,
            initial_step: 0.05,
            simplex_tol: 1e-6,
            warm_start: Some((theta_q.to_vec(), theta_e.to_vec())),
            ..Self::default()
        }
    }
}

const RESTART_TOL: f64 = 1e-10;

/// Fits the joint regression with default options.
pub fn fit_joint(y: &[f64], x: &Design, tau: ProbabilityLevel) -> Result<JointFit> {
    fit_joint_with(y, x, tau, &FitOptions::default())
}

/// Fits the joint regression.
///
/// Returns the best point found; `converged` is false when the final simplex
/// did not shrink below `opts.simplex_tol` or the last restart still improved the loss
/// by more than `1e-10`.
pub fn fit_joint_with(
    y: &[f64],
    x: &Design,
    tau: ProbabilityLevel,
    opts: &FitOptions,
) -> Result<JointFit> {
    if y.len() != x.n() {
        return Err(Error::LengthMismatch {
            what: "returns",
            expected: x.n(),
            found: y.len(),
        });
    }
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "returns",
            index,
        });
    }
    let problem = Problem::new(y, x, tau.value());
    let k = x.k();

    let (tq0, te0) = problem.start(opts)?;
    let mut u = problem.to_normalized(&tq0, &te0);
    let mut rng = rng_from_seed(opts.seed);

    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut stalled = false;
    let mut runs = 0;
    while runs < opts.restarts.max(1) {
        let step = if runs == 0 {
            opts.initial_step
        } else {
            opts.initial_step * 0.5
        };
        let (cand, loss, simplex_ok) = problem.run(&u, step, opts.simplex_tol);
        runs += 1;
        match &best {
            None => best = Some((cand, loss, simplex_ok)),
            Some((_, best_loss, _)) => {
                let improvement = best_loss - loss;
                if loss < *best_loss {
                    best = Some((cand, loss, simplex_ok));
                }
                if improvement < RESTART_TOL {
                    stalled = true;
                    break;
                }
            }
        }
        let (bu, _, _) = best.as_ref().expect("at least one run");
        u = bu
            .iter()
            .map(|&v| v + opts.jitter * v.abs().max(0.05) * rng.random_range(-1.0..=1.0))
            .collect();
    }
    let (bu, loss, simplex_ok) = best.expect("at least one run");
    let (theta_q, theta_e) = problem.params_of(&bu);
    debug_assert_eq!(theta_q.len(), k);
    Ok(JointFit {
        theta_q,
        theta_e,
        loss,
        cov_ee: None,
        cov_full: None,
        converged: simplex_ok && (stalled || opts.restarts <= 1),
        n_restarts: runs,
    })
}

/// Exact minimizer for the intercept-only model: the type-1 empirical
/// quantile and the tail value solving the first-order condition in `e`.
pub fn fit_intercept_only(y: &[f64], tau: ProbabilityLevel) -> Result<JointFit> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let t = tau.value();
    let mut scratch = y.to_vec();
    let q = quantile_in_place(&mut scratch, t);
    let tail: f64 = y.iter().filter(|&&v| v <= q).map(|v| v - q).sum();
    let e = q + tail / (t * y.len() as f64);
    if e >= 0.0 {
        return Err(Error::InfeasibleEs(e));
    }
    let x = Design::intercept_only(y.len());
    Ok(JointFit {
        theta_q: vec![q],
        theta_e: vec![e],
        loss: split_loss(&[q], &[e], y, &x, t),
        cov_ee: None,
        cov_full: None,
        converged: true,
        n_restarts: 0,
    })
}

struct Problem<'a> {
    y: &'a [f64],
    x: &'a Design,
    tau: f64,
    /// Per-column coefficient scale.
    scale: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(y: &'a [f64], x: &'a Design, tau: f64) -> Self {
        let (_, sd) = mean_sd(y);
        let base = if sd > 0.0 {
            sd
        } else {
            y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)
        };
        let n = x.n() as f64;
        let scale = (0..x.k())
            .map(|j| {
                if x.intercept_column() == Some(j) {
                    base
                } else {
                    let rms = (x.column(j).map(|v| v * v).sum::<f64>() / n).sqrt();
                    base / rms
                }
            })
            .collect();
        Self { y, x, tau, scale }
    }

    fn k(&self) -> usize {
        self.x.k()
    }

    fn to_normalized(&self, tq: &[f64], te: &[f64]) -> Vec<f64> {
        tq.iter()
            .zip(&self.scale)
            .chain(te.iter().zip(&self.scale))
            .map(|(v, s)| v / s)
            .collect()
    }

    fn params_of(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.k();
        let tq = u[..k].iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        let te = u[k..].iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        (tq, te)
    }

    fn loss(&self, tq: &[f64], te: &[f64]) -> f64 {
        split_loss(tq, te, self.y, self.x, self.tau)
    }

    fn loss_normalized(&self, u: &[f64], tq: &mut [f64], te: &mut [f64]) -> f64 {
        let k = self.k();
        for j in 0..k {
            tq[j] = u[j] * self.scale[j];
            te[j] = u[k + j] * self.scale[j];
        }
        self.loss(tq, te)
    }

    fn feasible(&self, te: &[f64]) -> bool {
        (0..self.x.n()).all(|t| {
            let (_, e) = dot2(self.x.row(t), te, te);
            e < 0.0
        })
    }

    /// One simplex run from `u0` followed by the polish.
    fn run(&self, u0: &[f64], step: f64, x_tol: f64) -> (Vec<f64>, f64, bool) {
        let k = self.k();
        let mut tq = vec![0.0; k];
        let mut te = vec![0.0; k];
        let opts = NelderMeadOptions {
            x_tol,
            f_tol: f64::INFINITY,
            max_evals: 4000 * k,
            step,
            absolute_step: false,
        };
        let nm = nelder_mead(|u| self.loss_normalized(u, &mut tq, &mut te), u0, &opts);
        let (tq, te) = self.params_of(&nm.x);
        let (tq, te, loss) = self.polish(tq, te, nm.value);
        (self.to_normalized(&tq, &te), loss, nm.converged)
    }

    fn polish(&self, mut tq: Vec<f64>, mut te: Vec<f64>, mut loss: f64) -> (Vec<f64>, Vec<f64>, f64) {
        if !loss.is_finite() {
            return (tq, te, loss);
        }
        for _ in 0..2 {
            if let Some(snapped) = self.snap_quantile(&tq) {
                let l = self.loss(&snapped, &te);
                if l <= loss {
                    tq = snapped;
                    loss = l;
                }
            }
            let (new_te, l) = self.newton_es(&tq, te.clone(), loss);
            te = new_te;
            loss = l;
        }
        (tq, te, loss)
    }

    /// Quantile coefficients interpolating the `k` observations with the
    /// smallest absolute quantile residual.
    fn snap_quantile(&self, tq: &[f64]) -> Option<Vec<f64>> {
        let k = self.k();
        let mut res: Vec<(f64, usize)> = (0..self.x.n())
            .map(|t| {
                let (q, _) = dot2(self.x.row(t), tq, tq);
                ((self.y[t] - q).abs(), t)
            })
            .collect();
        if res.len() > k {
            res.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        }
        let rows = &res[..k];
        let a = DMatrix::from_fn(k, k, |i, j| self.x.row(rows[i].1)[j]);
        let b = DVector::from_fn(k, |i, _| self.y[rows[i].1]);
        let sol = a.lu().solve(&b)?;
        sol.iter().all(|v| v.is_finite()).then(|| sol.iter().copied().collect())
    }

    /// Newton iterations on the ES coefficients with the quantile
    /// coefficients held fixed.
    fn newton_es(&self, tq: &[f64], mut te: Vec<f64>, mut loss: f64) -> (Vec<f64>, f64) {
        let k = self.k();
        for _ in 0..50 {
            let mut grad = DVector::<f64>::zeros(k);
            let mut hess = DMatrix::<f64>::zeros(k, k);
            for t in 0..self.x.n() {
                let row = self.x.row(t);
                let (q, e) = dot2(row, tq, &te);
                let ident = identification_es(self.y[t], q, e, self.tau);
                let g = ident / (e * e);
                let h = (e - 2.0 * ident) / (e * e * e);
                for a in 0..k {
                    grad[a] += row[a] * g;
                    for b in 0..k {
                        hess[(a, b)] += row[a] * row[b] * h;
                    }
                }
            }
            let Some(chol) = hess.cholesky() else { break };
            let dir = chol.solve(&grad);
            let mut step = 1.0;
            let mut accepted = false;
            let mut trial = te.clone();
            while step > 1e-10 {
                for j in 0..k {
                    trial[j] = te[j] - step * dir[j];
                }
                let l = self.loss(tq, &trial);
                if l <= loss {
                    accepted = true;
                    loss = l;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            let size = (0..k).map(|j| (trial[j] - te[j]).abs()).fold(0.0, f64::max);
            let norm = te.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            te = trial;
            if size <= 1e-15 * norm {
                break;
            }
        }
        (te, loss)
    }

    /// Pinball-loss fit of the quantile equation.
    fn pinball_start(&self) -> Vec<f64> {
        let k = self.k();
        let mut scratch = self.y.to_vec();
        let qy = quantile_in_place(&mut scratch, self.tau);
        let mut u0 = vec![0.0; k];
        if let Some(j) = self.x.intercept_column() {
            u0[j] = qy / self.scale[j];
        }
        let mut tq = vec![0.0; k];
        let pinball = |u: &[f64], tq: &mut [f64]| -> f64 {
            for j in 0..k {
                tq[j] = u[j] * self.scale[j];
            }
            let mut s = 0.0;
            for t in 0..self.x.n() {
                let (q, _) = dot2(self.x.row(t), tq, tq);
                let r = self.y[t] - q;
                s += if r < 0.0 { (self.tau - 1.0) * r } else { self.tau * r };
            }
            s
        };
        let opts = NelderMeadOptions {
            x_tol: 1e-6,
            f_tol: f64::INFINITY,
            max_evals: 2000 * k,
            step: 0.1,
            absolute_step: false,
        };
        let nm = nelder_mead(|u| pinball(u, &mut tq), &u0, &opts);
        nm.x.iter().zip(&self.scale).map(|(v, s)| v * s).collect()
    }

    fn start(&self, opts: &FitOptions) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.k();
        if let Some((tq, te)) = &opts.warm_start {
            if tq.len() == k && te.len() == k && self.feasible(te) {
                return Ok((tq.clone(), te.clone()));
            }
        }
        let tq0 = self.pinball_start();
        let mut scratch = Vec::with_capacity(self.y.len());

        if let Some(j) = self.x.intercept_column() {
            let res: Vec<f64> = (0..self.x.n())
                .map(|t| self.y[t] - dot2(self.x.row(t), &tq0, &tq0).0)
                .collect();
            let (q, es, _) = tail_summary(&res, self.tau, &mut scratch);
            let mut te = tq0.clone();
            te[j] += es - q;
            if self.feasible(&te) {
                return Ok((tq0, te));
            }
        }

        let (_, es_y, _) = tail_summary(self.y, self.tau, &mut scratch);
        if es_y < 0.0 {
            let n = self.x.n() as f64;
            for j in 0..k {
                let col: Vec<f64> = self.x.column(j).collect();
                let same_sign = col.iter().all(|&v| v > 0.0) || col.iter().all(|&v| v < 0.0);
                if same_sign {
                    let mut te = vec![0.0; k];
                    te[j] = es_y / (col.iter().sum::<f64>() / n);
                    if self.feasible(&te) {
                        return Ok((tq0, te));
                    }
                }
            }
        }
        Err(Error::NoFeasibleStart)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::InnovationLaw;
    use crate::jointreg::average_loss;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn tau(t: f64) -> ProbabilityLevel {
        ProbabilityLevel::new(t).unwrap()
    }

    fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Sort-based closed form for the intercept-only minimizer.
    fn oracle_intercept(y: &[f64], t: f64) -> (f64, f64) {
        let mut s = y.to_vec();
        s.sort_by(f64::total_cmp);
        let k = (t * y.len() as f64 - 1e-12).ceil().max(1.0) as usize;
        let q = s[k - 1];
        let tail: f64 = y.iter().filter(|&&v| v <= q).map(|v| v - q).sum();
        (q, q + tail / (t * y.len() as f64))
    }

    #[test]
    fn intercept_only_matches_closed_form() {
        for seed in 0..20 {
            let y = normal_sample(50, seed);
            let x = Design::intercept_only(50);
            let fit = fit_joint(&y, &x, tau(0.025)).unwrap();
            let (q, e) = oracle_intercept(&y, 0.025);
            assert!((fit.theta_q[0] - q).abs() < 1e-6, "seed {seed}");
            assert!((fit.theta_e[0] - e).abs() < 1e-6, "seed {seed}");
            let exact = fit_intercept_only(&y, tau(0.025)).unwrap();
            assert_eq!(exact.theta_q[0], q);
            assert!((exact.theta_e[0] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn intercept_only_matches_grid_search() {
        // tau * T = 2.5 is not an integer, so the minimizer is unique.
        let y = normal_sample(50, 99);
        let x = Design::intercept_only(50);
        let t = tau(0.05);
        let fit = fit_joint(&y, &x, t).unwrap();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut q = -3.0;
        while q < 0.0 {
            let mut e = -4.0;
            while e < -0.001 {
                let l = average_loss(&[q, e], &y, &x, t);
                if l < best.0 {
                    best = (l, q, e);
                }
                e += 1e-3;
            }
            q += 1e-3;
        }
        assert!(fit.loss <= best.0 + 1e-12);
        assert!((fit.theta_q[0] - best.1).abs() < 2e-3, "{} vs {}", fit.theta_q[0], best.1);
        assert!((fit.theta_e[0] - best.2).abs() < 2e-3, "{} vs {}", fit.theta_e[0], best.2);
    }

    #[test]
    fn recovers_unit_slope_on_oracle_forecasts() {
        // Location-scale data with known conditional ES.
        let law = InnovationLaw::student_t(5.0).unwrap();
        let es_z = law.es(tau(0.025));
        let sampler = law.sampler();
        let mut rng = rng_from_seed(7);
        let n = 50_000;
        let mut y = Vec::with_capacity(n);
        let mut es = Vec::with_capacity(n);
        for t in 0..n {
            let sigma = 0.5 + ((t as f64) * 0.01).sin().abs() * 2.0;
            y.push(sigma * sampler.draw(&mut rng));
            es.push(sigma * es_z);
        }
        let x = Design::with_intercept(&es).unwrap();
        let fit = fit_joint(&y, &x, tau(0.025)).unwrap();
        assert!(fit.theta_e[0].abs() < 0.15, "{:?}", fit.theta_e);
        assert!((fit.theta_e[1] - 1.0).abs() < 0.1, "{:?}", fit.theta_e);
        assert!(fit.converged);
    }

    #[test]
    fn slope_reparameterization() {
        let mut rng = rng_from_seed(3);
        let n = 1000;
        let es: Vec<f64> = (0..n).map(|t| -2.0 - (t % 7) as f64 * 0.3).collect();
        let y: Vec<f64> = es
            .iter()
            .map(|e| {
                let z: f64 = StandardNormal.sample(&mut rng);
                -e / 2.3 * z
            })
            .collect();
        let x1 = Design::with_intercept(&es).unwrap();
        let c = 10.0;
        let es_c: Vec<f64> = es.iter().map(|e| c * e).collect();
        let x2 = Design::with_intercept(&es_c).unwrap();
        let f1 = fit_joint(&y, &x1, tau(0.025)).unwrap();
        let f2 = fit_joint(&y, &x2, tau(0.025)).unwrap();
        assert!((f2.theta_e[1] - f1.theta_e[1] / c).abs() < 1e-6 * (1.0 + f1.theta_e[1].abs()));
        for t in 0..n {
            let a = f1.theta_e[0] + f1.theta_e[1] * es[t];
            let b = f2.theta_e[0] + f2.theta_e[1] * es_c[t];
            assert!((a - b).abs() < 1e-6, "row {t}: {a} vs {b}");
        }
    }

    #[test]
    fn warm_start_reproduces_solution() {
        let y = normal_sample(500, 5);
        let es: Vec<f64> = (0..500).map(|t| -2.0 - (t % 5) as f64 * 0.1).collect();
        let x = Design::with_intercept(&es).unwrap();
        let cold = fit_joint(&y, &x, tau(0.05)).unwrap();
        let warm = fit_joint_with(
            &y,
            &x,
            tau(0.05),
            &FitOptions::warm(&cold.theta_q, &cold.theta_e),
        )
        .unwrap();
        assert!(warm.loss <= cold.loss + 1e-10);
    }

    #[test]
    fn no_feasible_start_is_reported() {
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let x = Design::intercept_only(4);
        assert_eq!(fit_joint(&y, &x, tau(0.5)), Err(Error::NoFeasibleStart));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn intercept_fit_is_scale_equivariant(seed in 0u64..10_000, c in 0.1f64..10.0) {
            let y = normal_sample(50, seed);
            let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
            let x = Design::intercept_only(50);
            let a = fit_joint(&y, &x, tau(0.025)).unwrap();
            let b = fit_joint(&yc, &x, tau(0.025)).unwrap();
            prop_assert!((b.theta_q[0] - c * a.theta_q[0]).abs() < 1e-6 * c);
            prop_assert!((b.theta_e[0] - c * a.theta_e[0]).abs() < 1e-6 * c);
            let (q, e) = oracle_intercept(&y, 0.025);
            prop_assert!((a.theta_q[0] - q).abs() < 1e-6);
            prop_assert!((a.theta_e[0] - e).abs() < 1e-6);
        }
    }
}
