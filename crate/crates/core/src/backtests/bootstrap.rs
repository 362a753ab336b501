//! Deterministic resampling loops.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Attempts per draw before the whole bootstrap fails.
const MAX_ATTEMPTS: u64 = 10;

/// Outcome of a bootstrap loop.
pub(crate) struct Draws<T> {
    pub values: Vec<T>,
    /// Attempts that failed and were redrawn.
    pub redrawn: usize,
}

/// Evaluates `draw` for `b = 0..draws`. Draw `b` uses a generator seeded by
/// `(seed, b, attempt)`; a failed attempt is redrawn with the next attempt
/// number. The result is independent of thread scheduling.
pub(crate) fn run_draws<T, F>(draws: usize, seed: u64, draw: F) -> Result<Draws<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync,
{
    let results: Vec<Result<(T, usize)>> = (0..draws)
        .into_par_iter()
        .map(|b| {
            let draw_seed = derive_seed(seed, b as u64);
            let mut last = None;
            for attempt in 0..MAX_ATTEMPTS {
                let mut rng = rng_from_seed(derive_seed(draw_seed, attempt));
                match draw(&mut rng) {
                    Ok(v) => return Ok((v, attempt as usize)),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect();
    let mut values = Vec::with_capacity(draws);
    let mut redrawn = 0;
    for r in results {
        let (v, failed) = r?;
        values.push(v);
        redrawn += failed;
    }
    Ok(Draws { values, redrawn })
}

/// Indices of an iid resample of size `n`.
pub(crate) fn resample_indices(rng: &mut SimRng, n: usize, out: &mut Vec<usize>) {
    use rand::Rng;
    out.clear();
    out.extend((0..n).map(|_| rng.random_range(0..n)));
}

/// Share of `stats` satisfying `pred`.
pub(crate) fn share<T>(stats: &[T], pred: impl Fn(&T) -> bool) -> f64 {
    stats.iter().filter(|s| pred(s)).count() as f64 / stats.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand::Rng;

    #[test]
    fn draws_are_reproducible_and_redraw_failures() {
        let f = |rng: &mut SimRng| -> Result<u64> {
            let v: u64 = rng.random();
            if v % 3 == 0 {
                Err(Error::EmptyTail)
            } else {
                Ok(v)
            }
        };
        let a = run_draws(200, 5, f).unwrap();
        let b = run_draws(200, 5, f).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.redrawn > 0);
        assert!(a.values.iter().all(|v| v % 3 != 0));
    }

    #[test]
    fn persistent_failure_is_reported() {
        let r = run_draws(3, 1, |_| -> Result<()> { Err(Error::EmptyTail) });
        assert_eq!(r.err(), Some(Error::EmptyTail));
    }
}
