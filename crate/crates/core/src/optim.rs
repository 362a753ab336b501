//! Nelder–Mead simplex minimization.
//!
//! Infinite objective values are allowed and treated as "worse than
//! anything finite", which is how infeasible parameters are rejected.

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop once every vertex is within this sup-norm distance of the best.
    pub x_tol: f64,
    /// Also require the spread of objective values to fall below this.
    pub f_tol: f64,
    pub max_evals: usize,
    /// Initial simplex edge per coordinate, relative to `max(|x0_j|, 1)`
    /// unless `absolute_step` is set.
    pub step: f64,
    pub absolute_step: bool,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-8,
            f_tol: 1e-12,
            max_evals: 20_000,
            step: 0.1,
            absolute_step: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// Final sup-norm simplex diameter.
    pub diameter: f64,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n > 0, "nelder_mead needs at least one coordinate");
    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for j in 0..n {
        let mut v = x0.to_vec();
        let h = if opts.absolute_step {
            opts.step
        } else {
            opts.step * x0[j].abs().max(1.0)
        };
        v[j] += h;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    let diameter_of = |simplex: &[Vec<f64>], best: usize| -> f64 {
        simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    };

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let diameter = diameter_of(&simplex, best);
        let spread = values[worst] - values[best];
        let flat = values[best].is_finite() && spread.is_finite() && spread <= opts.f_tol;
        if diameter < opts.x_tol && (flat || !values[best].is_finite()) {
            return NelderMeadResult {
                x: simplex[best].clone(),
                value: values[best],
                evals,
                diameter,
                converged: true,
            };
        }
        if diameter < opts.x_tol * 1e-3 || evals >= opts.max_evals {
            return NelderMeadResult {
                x: simplex[best].clone(),
                value: values[best],
                evals,
                diameter,
                converged: diameter < opts.x_tol,
            };
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        for j in 0..n {
            trial[j] = centroid[j] + alpha * (centroid[j] - simplex[worst][j]);
        }
        let f_r = f(&trial);
        evals += 1;

        if f_r < values[best] {
            for j in 0..n {
                trial2[j] = centroid[j] + gamma * (trial[j] - centroid[j]);
            }
            let f_e = f(&trial2);
            evals += 1;
            if f_e < f_r {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = f_e;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_r;
            }
            continue;
        }
        if f_r < values[second_worst] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = f_r;
            continue;
        }

        // Contraction: outside if the reflection improved on the worst point.
        let outside = f_r < values[worst];
        for j in 0..n {
            trial2[j] = if outside {
                centroid[j] + rho * (trial[j] - centroid[j])
            } else {
                centroid[j] + rho * (simplex[worst][j] - centroid[j])
            };
        }
        let f_c = f(&trial2);
        evals += 1;
        let accept = if outside { f_c <= f_r } else { f_c < values[worst] };
        if accept {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = f_c;
            continue;
        }

        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for (x, a) in simplex[i].iter_mut().zip(&anchor) {
                *x = a + shrink * (*x - a);
            }
            values[i] = f(&simplex[i]);
            evals += 1;
        }
    }
}
