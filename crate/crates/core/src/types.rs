//! Domain types shared by every module and validation of return/forecast pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability level `tau` of the VaR/ES pair, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ProbabilityLevel(f64);

impl ProbabilityLevel {
    /// The Basel level of 2.5%.
    pub const BASEL: ProbabilityLevel = ProbabilityLevel(0.025);

    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_finite() && tau > 0.0 && tau < 1.0 {
            Ok(Self(tau))
        } else {
            Err(Error::InvalidProbability(tau))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for ProbabilityLevel {
    fn default() -> Self {
        Self::BASEL
    }
}

impl TryFrom<f64> for ProbabilityLevel {
    type Error = Error;

    fn try_from(tau: f64) -> Result<Self> {
        Self::new(tau)
    }
}

impl From<ProbabilityLevel> for f64 {
    fn from(p: ProbabilityLevel) -> f64 {
        p.0
    }
}

/// Time-ordered realized returns (finite, at least two observations).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries(Vec<f64>);

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                found: values.len(),
            });
        }
        check_finite("returns", &values)?;
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ReturnSeries {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-day forecasts aligned with a [`ReturnSeries`].
///
/// ES forecasts are required; VaR and volatility forecasts are only consumed
/// by the competitor tests.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForecastSet {
    pub es: Vec<f64>,
    pub var: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
}

impl ForecastSet {
    pub fn new(es: Vec<f64>) -> Self {
        Self {
            es,
            var: None,
            sigma: None,
        }
    }

    pub fn with_var(mut self, var: Vec<f64>) -> Self {
        self.var = Some(var);
        self
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn len(&self) -> usize {
        self.es.len()
    }

    pub fn is_empty(&self) -> bool {
        self.es.is_empty()
    }

    pub fn var(&self) -> Result<&[f64]> {
        self.var.as_deref().ok_or(Error::MissingForecast("var"))
    }

    pub fn sigma(&self) -> Result<&[f64]> {
        self.sigma.as_deref().ok_or(Error::MissingForecast("sigma"))
    }

    /// Multiplies every present forecast column by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let scale = |v: &Vec<f64>| v.iter().map(|x| x * c).collect::<Vec<_>>();
        Self {
            es: scale(&self.es),
            var: self.var.as_ref().map(scale),
            sigma: self.sigma.as_ref().map(scale),
        }
    }
}

/// Direction of the alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    #[default]
    TwoSided,
    /// H1: the tested parameter is negative, i.e. the ES forecasts are too
    /// large (market risk is underestimated).
    OneSidedLess,
}

impl Hypothesis {
    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::TwoSided => "two-sided",
            Hypothesis::OneSidedLess => "one-sided",
        }
    }
}

/// Outcome of one backtest.
///
/// `statistic` is either a nonnegative Wald-type statistic (two-sided
/// chi-square tests) or a signed t/z statistic; see [`TestReport::score`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub side: Hypothesis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_bootstrap: Option<usize>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl TestReport {
    pub fn new(test_name: impl Into<String>, statistic: f64, p_value: f64, side: Hypothesis) -> Self {
        Self {
            test_name: test_name.into(),
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            side,
            n_bootstrap: None,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_bootstrap(mut self, b: usize) -> Self {
        self.n_bootstrap = Some(b);
        self
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    /// Evidence against the null on a "larger rejects" scale.
    ///
    /// One-sided tests reject for small statistics, so the sign is flipped;
    /// two-sided t statistics use their magnitude; Wald statistics are
    /// already nonnegative.
    pub fn score(&self) -> f64 {
        match self.side {
            Hypothesis::OneSidedLess => -self.statistic,
            Hypothesis::TwoSided => self.statistic.abs(),
        }
    }

    pub fn rejects(&self, nominal: f64) -> bool {
        self.p_value <= nominal
    }
}

/// Non-fatal findings of [`validate_pair`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationWarning {
    /// Some VaR forecasts lie below the ES forecast of the same day.
    VarBelowEs { count: usize, first_index: usize },
}

/// A return series and forecast set that passed [`validate_pair`].
#[derive(Debug, Clone)]
pub struct ValidatedPair<'a> {
    pub returns: &'a ReturnSeries,
    pub forecasts: &'a ForecastSet,
    pub warnings: Vec<ValidationWarning>,
}

/// Checks every [`ForecastSet`] invariant against the return series.
pub fn validate_pair<'a>(
    returns: &'a ReturnSeries,
    forecasts: &'a ForecastSet,
) -> Result<ValidatedPair<'a>> {
    let n = returns.len();
    check_columns(n, &forecasts.es, forecasts.var.as_deref(), forecasts.sigma.as_deref())?;

    let mut warnings = Vec::new();
    if let Some(var) = &forecasts.var {
        let mut count = 0;
        let mut first = None;
        for (i, (v, e)) in var.iter().zip(&forecasts.es).enumerate() {
            if v < e {
                count += 1;
                first.get_or_insert(i);
            }
        }
        if let Some(first_index) = first {
            warnings.push(ValidationWarning::VarBelowEs { count, first_index });
        }
    }

    Ok(ValidatedPair {
        returns,
        forecasts,
        warnings,
    })
}

/// Slice-level version of the validation used on hot paths (bootstrap and
/// Monte Carlo), where the newtypes are not materialized.
pub(crate) fn check_columns(
    n: usize,
    es: &[f64],
    var: Option<&[f64]>,
    sigma: Option<&[f64]>,
) -> Result<()> {
    check_len("es", n, es.len())?;
    check_finite("es", es)?;
    if let Some((index, &value)) = es.iter().enumerate().find(|(_, e)| **e >= 0.0) {
        return Err(Error::NonNegativeEsForecast { index, value });
    }
    if let Some(var) = var {
        check_len("var", n, var.len())?;
        check_finite("var", var)?;
    }
    if let Some(sigma) = sigma {
        check_len("sigma", n, sigma.len())?;
        check_finite("sigma", sigma)?;
        if let Some((index, &value)) = sigma.iter().enumerate().find(|(_, s)| **s <= 0.0) {
            return Err(Error::NonPositiveSigma { index, value });
        }
    }
    Ok(())
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            found,
        })
    }
}

fn check_finite(what: &'static str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}
