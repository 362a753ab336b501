//! Regressor matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major `n x k` regressor matrix with finite entries and full column
/// rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    data: Vec<f64>,
    n: usize,
    k: usize,
    intercept: Option<usize>,
    /// For `[1]` and `[1, x]` designs, the column `x` (empty for `[1]`).
    affine: Option<Vec<f64>>,
}

impl Design {
    /// Builds a design from row-major data.
    pub fn from_rows(k: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || data.is_empty() || data.len() % k != 0 {
            return Err(Error::InvalidDesign(format!(
                "{} values do not form rows of width {k}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "design",
                index: i / k,
            });
        }
        let n = data.len() / k;
        let intercept = (0..k).find(|&j| (0..n).all(|t| data[t * k + j] == 1.0));
        let affine = match (k, intercept) {
            (1, Some(_)) => Some(Vec::new()),
            (2, Some(j)) => Some((0..n).map(|t| data[t * k + 1 - j]).collect()),
            _ => None,
        };
        let design = Self {
            data,
            n,
            k,
            intercept,
            affine,
        };
        design.check_rank()?;
        Ok(design)
    }

    /// Builds a design from equally long columns.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let k = columns.len();
        let n = columns.first().map_or(0, |c| c.len());
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::LengthMismatch {
                what: "design column",
                expected: n,
                found: c.len(),
            });
        }
        let mut data = Vec::with_capacity(n * k);
        for t in 0..n {
            data.extend(columns.iter().map(|c| c[t]));
        }
        Self::from_rows(k, data)
    }

    /// Column of ones.
    pub fn intercept_only(n: usize) -> Self {
        Self {
            data: vec![1.0; n],
            n,
            k: 1,
            intercept: Some(0),
            affine: Some(Vec::new()),
        }
    }

    /// Columns `[1, x]`.
    pub fn with_intercept(x: &[f64]) -> Result<Self> {
        let ones = vec![1.0; x.len()];
        Self::from_columns(&[&ones, x])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.k..(t + 1) * self.k]
    }

    /// Index of a column of ones, if any.
    pub fn intercept_column(&self) -> Option<usize> {
        self.intercept
    }

    /// `(intercept index, slope column)` for `[1]` and `[1, x]` designs.
    pub(crate) fn affine(&self) -> Option<(usize, &[f64])> {
        match (self.intercept, &self.affine) {
            (Some(j), Some(x)) => Some((j, x.as_slice())),
            _ => None,
        }
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.k).copied()
    }

    /// `X^T diag(w) X`.
    pub(crate) fn weighted_gram(&self, weights: impl Iterator<Item = f64>) -> DMatrix<f64> {
        let k = self.k;
        let mut g = DMatrix::zeros(k, k);
        for (t, w) in weights.enumerate() {
            let row = self.row(t);
            for a in 0..k {
                let ra = w * row[a];
                for b in a..k {
                    g[(a, b)] += ra * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    fn check_rank(&self) -> Result<()> {
        if self.n < self.k {
            return Err(Error::InvalidDesign(format!(
                "{} rows cannot identify {} coefficients",
                self.n, self.k
            )));
        }
        // Scale columns to unit RMS so the rank check is unit-free.
        let rms: Vec<f64> = (0..self.k)
            .map(|j| (self.column(j).map(|v| v * v).sum::<f64>() / self.n as f64).sqrt())
            .collect();
        if rms.contains(&0.0) {
            return Err(Error::InvalidDesign("zero column".into()));
        }
        let mut g = self.weighted_gram(std::iter::repeat(1.0 / self.n as f64).take(self.n));
        for a in 0..self.k {
            for b in 0..self.k {
                g[(a, b)] /= rms[a] * rms[b];
            }
        }
        let eig = g.symmetric_eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 1e-10 * self.k as f64 {
            return Err(Error::InvalidDesign("columns are collinear".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_and_detects_intercept() {
        let d = Design::with_intercept(&[-1.0, -2.0, -3.0]).unwrap();
        assert_eq!((d.n(), d.k()), (3, 2));
        assert_eq!(d.row(1), &[1.0, -2.0]);
        assert_eq!(d.intercept_column(), Some(0));
        assert_eq!(d.column(1).collect::<Vec<_>>(), vec![-1.0, -2.0, -3.0]);
        assert_eq!(Design::intercept_only(4).intercept_column(), Some(0));
    }

    #[test]
    fn rejects_collinear_and_nonfinite() {
        assert!(matches!(
            Design::with_intercept(&[-2.0; 5]),
            Err(Error::InvalidDesign(_))
        ));
        assert!(matches!(
            Design::with_intercept(&[-2.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            Design::from_columns(&[&[1.0, 2.0], &[1.0]]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(Design::from_rows(2, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn weighted_gram_matches_hand_computation() {
        let d = Design::with_intercept(&[2.0, 3.0]).unwrap();
        let g = d.weighted_gram([1.0, 2.0].into_iter());
        assert_eq!(g[(0, 0)], 3.0);
        assert_eq!(g[(0, 1)], 8.0);
        assert_eq!(g[(1, 0)], 8.0);
        assert_eq!(g[(1, 1)], 22.0);
    }
}
