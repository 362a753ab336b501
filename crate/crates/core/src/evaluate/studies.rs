//! Size, power and misspecification-sweep runners.
//!
//! Size adjustment moves each test's own critical value. Outcomes are
//! therefore ordered by p-value (smaller is stronger evidence), with ties
//! broken by the test statistic. For asymptotic tests this is the order of
//! the statistic itself; for bootstrap tests it moves the bootstrap critical
//! value rather than a fixed threshold on the raw statistic, whose null
//! distribution depends on the number of resampled observations.

use rayon::prelude::*;
use serde::Serialize;

use crate::backtests::Backtest;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::simulate::{apply_misspec, GarchSpec, MisspecDesign, MisspecKind};
use crate::types::{ForecastSet, Hypothesis, ProbabilityLevel, TestReport};

use super::curves::{pauc, roc_curve, size_adjusted_critical_value, PowerCurve};
use super::{oracle_on, Dgp, Forecaster, McConfig, PAUC_RANGE};

/// A study aborts when more than this share of replications of one test
/// failed.
pub const MAX_EXCLUDED_SHARE: f64 = 0.01;

/// Anything that maps returns and forecasts to a [`TestReport`].
pub trait StudyTest: Sync {
    fn name(&self) -> String;
    fn side(&self) -> Hypothesis;
    fn run(&self, y: &[f64], fc: &ForecastSet, tau: ProbabilityLevel, seed: u64) -> Result<TestReport>;
}

impl StudyTest for Backtest {
    fn name(&self) -> String {
        Backtest::name(self)
    }

    fn side(&self) -> Hypothesis {
        Backtest::side(self)
    }

    fn run(&self, y: &[f64], fc: &ForecastSet, tau: ProbabilityLevel, seed: u64) -> Result<TestReport> {
        Backtest::run(self, y, fc, tau, seed)
    }
}

/// `(p-value, score)` of one replication, `None` when it was excluded.
type Outcome = Option<(f64, f64)>;

fn outcome(report: Result<TestReport>) -> Outcome {
    let r = report.ok()?;
    let score = r.score();
    (r.p_value.is_finite() && !score.is_nan()).then_some((r.p_value, score))
}

/// p-values and scores of one test across replications.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Outcomes {
    pub p_values: Vec<f64>,
    pub scores: Vec<f64>,
    /// Replications in which the test failed.
    pub excluded: usize,
}

impl Outcomes {
    fn push(&mut self, o: Outcome) {
        match o {
            Some((p, s)) => {
                self.p_values.push(p);
                self.scores.push(s);
            }
            None => self.excluded += 1,
        }
    }

    pub fn valid(&self) -> usize {
        self.p_values.len()
    }

    /// Share of valid replications with `p <= nominal`.
    pub fn rejection_rate(&self, nominal: f64) -> f64 {
        if self.p_values.is_empty() {
            return f64::NAN;
        }
        self.p_values.iter().filter(|&&p| p <= nominal).count() as f64 / self.valid() as f64
    }

    fn check(&self, test: &str) -> Result<()> {
        let reps = self.valid() + self.excluded;
        if self.excluded as f64 > MAX_EXCLUDED_SHARE * reps as f64 || self.valid() == 0 {
            return Err(Error::TooManyExclusions {
                test: test.to_string(),
                excluded: self.excluded,
                reps,
            });
        }
        Ok(())
    }
}

/// Joint ranks of null and alternative outcomes on the evidence order
/// (larger rank = stronger evidence; tied outcomes share a rank).
fn evidence_ranks(null: &Outcomes, alt: &Outcomes) -> (Vec<f64>, Vec<f64>) {
    let key = |o: &Outcomes, i: usize| (o.p_values[i], o.scores[i]);
    let mut all: Vec<(f64, f64, usize)> = (0..null.valid())
        .map(|i| {
            let (p, s) = key(null, i);
            (p, s, i)
        })
        .chain((0..alt.valid()).map(|i| {
            let (p, s) = key(alt, i);
            (p, s, null.valid() + i)
        }))
        .collect();
    // Weakest evidence first: large p, then small score.
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut ranks = vec![0.0; all.len()];
    let mut rank = 0.0;
    for (j, &(p, s, idx)) in all.iter().enumerate() {
        if j > 0 && (all[j - 1].0 != p || all[j - 1].1 != s) {
            rank += 1.0;
        }
        ranks[idx] = rank;
    }
    let alt_ranks = ranks.split_off(null.valid());
    (ranks, alt_ranks)
}

fn replication_seed(cfg: &McConfig, t: usize, r: usize) -> u64 {
    derive_seed(derive_seed(cfg.master_seed, t as u64), r as u64)
}

fn path_seed(rep: u64) -> u64 {
    derive_seed(rep, 0)
}

fn test_seed(rep: u64, i: usize) -> u64 {
    derive_seed(rep, 1 + i as u64)
}

fn run_all<T: StudyTest>(tests: &[T], y: &[f64], fc: &ForecastSet, tau: ProbabilityLevel, rep: u64) -> Vec<Outcome> {
    tests
        .iter()
        .enumerate()
        .map(|(i, test)| outcome(test.run(y, fc, tau, test_seed(rep, i))))
        .collect()
}

/// Runs `per_rep` for every replication in parallel and gathers the results
/// in replication order.
fn replicate<R: Send>(n_reps: usize, per_rep: impl Fn(usize) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    (0..n_reps).into_par_iter().map(per_rep).collect()
}

/// Transposes per-replication outcome vectors into per-slot [`Outcomes`].
fn gather(slots: usize, reps: impl IntoIterator<Item = Vec<Outcome>>) -> Vec<Outcomes> {
    let mut out = vec![Outcomes::default(); slots];
    for rep in reps {
        for (o, slot) in rep.into_iter().zip(out.iter_mut()) {
            slot.push(o);
        }
    }
    out
}

fn check_tests<T: StudyTest>(tests: &[T]) -> Result<()> {
    if tests.is_empty() {
        Err(Error::InvalidParameter("no tests requested".into()))
    } else {
        Ok(())
    }
}

/// Empirical size of one test at one sample size and nominal level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeRow {
    pub test: String,
    pub side: Hypothesis,
    pub sample_size: usize,
    pub nominal: f64,
    pub rejection_rate: f64,
    pub n_valid: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeStudy {
    pub rows: Vec<SizeRow>,
    /// Per `(test, sample size)`, in row order.
    #[serde(skip)]
    pub outcomes: Vec<(String, usize, Outcomes)>,
    /// Forecast days dropped across all replications.
    pub dropped_days: usize,
}

/// Rejection frequencies of `tests` applied to `forecaster` output on paths
/// from `dgp`.
pub fn run_size_study<T: StudyTest>(
    dgp: &Dgp,
    forecaster: &Forecaster,
    tests: &[T],
    cfg: &McConfig,
    progress: &mut dyn FnMut(&str),
) -> Result<SizeStudy> {
    cfg.validate()?;
    check_tests(tests)?;
    let law = dgp.law();
    let mut study = SizeStudy {
        rows: Vec::new(),
        outcomes: Vec::new(),
        dropped_days: 0,
    };
    for &t in &cfg.sample_sizes {
        progress(&format!("size study: T = {t}, {} replications", cfg.n_reps));
        let reps = replicate(cfg.n_reps, |r| {
            let rep = replication_seed(cfg, t, r);
            let path = dgp.simulate(cfg, t, path_seed(rep))?;
            let sample = forecaster.forecast(&path, cfg.start(), law, cfg.tau)?;
            let res = run_all(tests, &sample.returns, &sample.forecasts, cfg.tau, rep);
            Ok((res, sample.dropped))
        })?;
        study.dropped_days += reps.iter().map(|(_, d)| d).sum::<usize>();
        let per_test = gather(tests.len(), reps.into_iter().map(|(o, _)| o));
        for (test, o) in tests.iter().zip(per_test) {
            let name = test.name();
            o.check(&name)?;
            for &nominal in &cfg.nominal_sizes {
                study.rows.push(SizeRow {
                    test: name.clone(),
                    side: test.side(),
                    sample_size: t,
                    nominal,
                    rejection_rate: o.rejection_rate(nominal),
                    n_valid: o.valid(),
                    excluded: o.excluded,
                });
            }
            study.outcomes.push((name, t, o));
        }
    }
    Ok(study)
}

/// Size, raw power and size-adjusted power at one nominal level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub test: String,
    pub sample_size: usize,
    pub nominal: f64,
    /// Rejection rate of the oracle forecasts.
    pub size: f64,
    /// Rejection rate of the alternative forecasts at the nominal level.
    pub raw_power: f64,
    pub size_adjusted_power: f64,
}

/// Null and alternative samples of one test at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCell {
    pub test: String,
    pub sample_size: usize,
    pub curve: PowerCurve,
    /// Partial AUC over [`PAUC_RANGE`].
    pub pauc: f64,
    #[serde(skip)]
    pub null: Outcomes,
    #[serde(skip)]
    pub alt: Outcomes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerStudy {
    pub rows: Vec<PowerRow>,
    pub cells: Vec<PowerCell>,
    pub dropped_days: usize,
}

/// Compares oracle forecasts with `alternative` forecasts on common paths.
///
/// Both forecast sets are evaluated on the days the alternative covers.
pub fn run_power_study<T: StudyTest>(
    dgp: &Dgp,
    alternative: &Forecaster,
    tests: &[T],
    cfg: &McConfig,
    progress: &mut dyn FnMut(&str),
) -> Result<PowerStudy> {
    cfg.validate()?;
    check_tests(tests)?;
    let law = dgp.law();
    let k = tests.len();
    let mut study = PowerStudy {
        rows: Vec::new(),
        cells: Vec::new(),
        dropped_days: 0,
    };
    for &t in &cfg.sample_sizes {
        progress(&format!("power study: T = {t}, {} replications", cfg.n_reps));
        let reps = replicate(cfg.n_reps, |r| {
            let rep = replication_seed(cfg, t, r);
            let path = dgp.simulate(cfg, t, path_seed(rep))?;
            let alt = alternative.forecast(&path, cfg.start(), law, cfg.tau)?;
            let null_fc = oracle_on(&path, &alt.days, law, cfg.tau);
            let mut res = run_all(tests, &alt.returns, &null_fc, cfg.tau, rep);
            res.extend(run_all(tests, &alt.returns, &alt.forecasts, cfg.tau, rep));
            Ok((res, alt.dropped))
        })?;
        study.dropped_days += reps.iter().map(|(_, d)| d).sum::<usize>();
        let mut slots = gather(2 * k, reps.into_iter().map(|(o, _)| o));
        let alts = slots.split_off(k);
        for ((test, null), alt) in tests.iter().zip(slots).zip(alts) {
            let name = test.name();
            null.check(&name)?;
            alt.check(&name)?;
            let (null_ev, alt_ev) = evidence_ranks(&null, &alt);
            for &nominal in &cfg.nominal_sizes {
                let c = size_adjusted_critical_value(&null_ev, nominal)?;
                study.rows.push(PowerRow {
                    test: name.clone(),
                    sample_size: t,
                    nominal,
                    size: null.rejection_rate(nominal),
                    raw_power: alt.rejection_rate(nominal),
                    size_adjusted_power: share_above(&alt_ev, c),
                });
            }
            let curve = roc_curve(&null_ev, &alt_ev)?;
            let area = pauc(&curve, PAUC_RANGE.0, PAUC_RANGE.1)?;
            study.cells.push(PowerCell {
                test: name,
                sample_size: t,
                curve,
                pauc: area,
                null,
                alt,
            });
        }
    }
    Ok(study)
}

fn share_above(xs: &[f64], c: f64) -> f64 {
    xs.iter().filter(|&&x| x > c).count() as f64 / xs.len() as f64
}

/// Rejection rates of one test at one grid value of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub test: String,
    pub side: Hypothesis,
    pub sample_size: usize,
    pub value: f64,
    /// Whether `value` reproduces the data-generating model.
    pub is_true_model: bool,
    pub nominal: f64,
    /// Share of replications with `p <= nominal`.
    pub raw_rate: f64,
    /// Rejection rate with the critical value calibrated so that the true
    /// model rejects at `nominal`.
    pub size_adjusted_rate: f64,
    pub n_valid: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepStudy {
    pub kind: MisspecKind,
    pub rows: Vec<SweepRow>,
}

/// Tests GARCH-filter forecasts built from misspecified versions of `base`
/// on data simulated from `base`, for every value of `grid`.
///
/// The grid must contain the true-model value; its replications calibrate
/// the size-adjusted critical values.
pub fn run_misspec_sweep<T: StudyTest>(
    base: &GarchSpec,
    kind: MisspecKind,
    grid: &[f64],
    tests: &[T],
    cfg: &McConfig,
    progress: &mut dyn FnMut(&str),
) -> Result<SweepStudy> {
    cfg.validate()?;
    check_tests(tests)?;
    base.validate()?;
    let truth = kind.true_value(base, cfg.tau);
    let truth_index = grid
        .iter()
        .position(|&g| g == truth || (g - truth).abs() <= 1e-12 * truth.abs())
        .ok_or_else(|| {
            Error::InvalidParameter(format!("sweep grid must contain the true value {truth}"))
        })?;
    let forecasters = grid
        .iter()
        .map(|&g| {
            let (spec, level) = apply_misspec(base, MisspecDesign::new(kind, g)?, cfg.tau)?;
            Ok(Forecaster::GarchFilter { spec, level })
        })
        .collect::<Result<Vec<_>>>()?;
    let dgp = Dgp::Garch(*base);
    let k = tests.len();
    let mut rows = Vec::new();
    for &t in &cfg.sample_sizes {
        progress(&format!(
            "sweep {kind:?}: T = {t}, {} grid values, {} replications",
            grid.len(),
            cfg.n_reps
        ));
        let reps = replicate(cfg.n_reps, |r| {
            let rep = replication_seed(cfg, t, r);
            let path = dgp.simulate(cfg, t, path_seed(rep))?;
            let mut res = Vec::with_capacity(grid.len() * k);
            for f in &forecasters {
                let s = f.forecast(&path, cfg.start(), base.law, cfg.tau)?;
                res.extend(run_all(tests, &s.returns, &s.forecasts, cfg.tau, rep));
            }
            Ok(res)
        })?;
        let slots = gather(grid.len() * k, reps);
        for (i, test) in tests.iter().enumerate() {
            let name = test.name();
            let null = &slots[truth_index * k + i];
            null.check(&name)?;
            for (g, &value) in grid.iter().enumerate() {
                let o = &slots[g * k + i];
                o.check(&name)?;
                let (null_ev, alt_ev) = evidence_ranks(null, o);
                for &nominal in &cfg.nominal_sizes {
                    let c = size_adjusted_critical_value(&null_ev, nominal)?;
                    rows.push(SweepRow {
                        test: name.clone(),
                        side: test.side(),
                        sample_size: t,
                        value,
                        is_true_model: g == truth_index,
                        nominal,
                        raw_rate: o.rejection_rate(nominal),
                        size_adjusted_rate: share_above(&alt_ev, c),
                        n_valid: o.valid(),
                        excluded: o.excluded,
                    });
                }
            }
        }
    }
    Ok(SweepStudy { kind, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtests::EsrMode;
    use crate::evaluate::size_adjusted_power;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    /// Ignores the data and returns a p-value that is uniform across seeds.
    struct UniformStub;

    impl StudyTest for UniformStub {
        fn name(&self) -> String {
            "uniform-stub".into()
        }
        fn side(&self) -> Hypothesis {
            Hypothesis::TwoSided
        }
        fn run(&self, _: &[f64], _: &ForecastSet, _: ProbabilityLevel, seed: u64) -> Result<TestReport> {
            let p: f64 = rng_from_seed(seed).random();
            Ok(TestReport::new("uniform-stub", 1.0 - p, p, Hypothesis::TwoSided))
        }
    }

    /// Always reports `p = 0.5`.
    struct HalfStub;

    impl StudyTest for HalfStub {
        fn name(&self) -> String {
            "half-stub".into()
        }
        fn side(&self) -> Hypothesis {
            Hypothesis::TwoSided
        }
        fn run(&self, _: &[f64], _: &ForecastSet, _: ProbabilityLevel, _: u64) -> Result<TestReport> {
            Ok(TestReport::new("half-stub", 0.0, 0.5, Hypothesis::TwoSided))
        }
    }

    /// Fails on every `every`-th seed residue.
    struct FlakyStub {
        every: u64,
    }

    impl StudyTest for FlakyStub {
        fn name(&self) -> String {
            "flaky-stub".into()
        }
        fn side(&self) -> Hypothesis {
            Hypothesis::TwoSided
        }
        fn run(&self, _: &[f64], _: &ForecastSet, _: ProbabilityLevel, seed: u64) -> Result<TestReport> {
            if seed % self.every == 0 {
                Err(Error::NoViolations)
            } else {
                Ok(TestReport::new("flaky-stub", 0.0, 0.5, Hypothesis::TwoSided))
            }
        }
    }

    fn small_cfg(reps: usize) -> McConfig {
        McConfig {
            n_reps: reps,
            sample_sizes: vec![50],
            nominal_sizes: vec![0.05],
            burnin: 50,
            presample: 0,
            master_seed: 11,
            ..McConfig::default()
        }
    }

    fn quiet() -> impl FnMut(&str) {
        |_| {}
    }

    fn outcomes(pairs: &[(f64, f64)]) -> Outcomes {
        let mut o = Outcomes::default();
        for &pair in pairs {
            o.push(Some(pair));
        }
        o
    }

    #[test]
    fn evidence_orders_by_p_then_statistic() {
        let null = outcomes(&[(0.5, 1.0), (0.01, 3.0), (0.01, 2.0)]);
        let alt = outcomes(&[(0.5, 1.0), (0.0, 9.0), (0.2, 50.0)]);
        let (n, a) = evidence_ranks(&null, &alt);
        assert_eq!(n, vec![0.0, 3.0, 2.0]);
        assert_eq!(a, vec![0.0, 4.0, 1.0]);
    }

    #[test]
    fn evidence_matches_scores_for_monotone_p_values() {
        let scores = [0.3, 2.5, 1.1, 4.0, 0.0];
        let mk = |s: &[f64]| outcomes(&s.iter().map(|&x| ((-x).exp(), x)).collect::<Vec<_>>());
        let null = mk(&scores[..3]);
        let alt = mk(&scores[3..]);
        let (n, a) = evidence_ranks(&null, &alt);
        for s in [0.05, 0.3, 0.6] {
            assert_eq!(
                size_adjusted_power(&null.scores, &alt.scores, s).unwrap(),
                size_adjusted_power(&n, &a, s).unwrap()
            );
        }
    }

    #[test]
    fn constant_p_values_never_reject() {
        let study = run_size_study(
            &Dgp::Garch(GarchSpec::reference()),
            &Forecaster::Oracle,
            &[HalfStub],
            &small_cfg(200),
            &mut quiet(),
        )
        .unwrap();
        assert_eq!(study.rows.len(), 1);
        assert_eq!(study.rows[0].rejection_rate, 0.0);
    }

    #[test]
    fn uniform_p_values_reject_at_nominal() {
        let n = 2000;
        let study = run_size_study(
            &Dgp::Garch(GarchSpec::reference()),
            &Forecaster::Oracle,
            &[UniformStub],
            &small_cfg(n),
            &mut quiet(),
        )
        .unwrap();
        let rate = study.rows[0].rejection_rate;
        let sd = (0.05f64 * 0.95 / n as f64).sqrt();
        assert!((rate - 0.05).abs() < 3.0 * sd, "{rate}");
    }

    #[test]
    fn exclusions_above_one_percent_abort() {
        let dgp = Dgp::Garch(GarchSpec::reference());
        let err = run_size_study(&dgp, &Forecaster::Oracle, &[FlakyStub { every: 10 }], &small_cfg(300), &mut quiet())
            .unwrap_err();
        assert!(matches!(err, Error::TooManyExclusions { .. }), "{err}");
        let ok = run_size_study(&dgp, &Forecaster::Oracle, &[FlakyStub { every: 1 << 40 }], &small_cfg(300), &mut quiet())
            .unwrap();
        assert_eq!(ok.rows[0].excluded, 0);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                run_size_study(
                    &Dgp::Garch(GarchSpec::reference()),
                    &Forecaster::Oracle,
                    &[Backtest::EsrIntercept {
                        mode: EsrMode::Asymptotic,
                        side: Hypothesis::TwoSided,
                    }],
                    &McConfig {
                        sample_sizes: vec![300],
                        ..small_cfg(100)
                    },
                    &mut quiet(),
                )
                .unwrap()
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn oracle_alternative_has_nominal_size_adjusted_power() {
        let cfg = McConfig {
            sample_sizes: vec![400],
            nominal_sizes: vec![0.05, 0.1],
            ..small_cfg(200)
        };
        let study = run_power_study(
            &Dgp::Garch(GarchSpec::reference()),
            &Forecaster::Oracle,
            &[Backtest::EsrIntercept {
                mode: EsrMode::Asymptotic,
                side: Hypothesis::TwoSided,
            }],
            &cfg,
            &mut quiet(),
        )
        .unwrap();
        for row in &study.rows {
            assert!((row.size_adjusted_power - row.nominal).abs() <= 1.0 / 200.0, "{row:?}");
            assert_eq!(row.size, row.raw_power);
        }
        assert!((study.cells[0].pauc - 0.00495).abs() < 1e-3);
    }

    #[test]
    fn sweep_is_nominal_at_the_true_model() {
        let base = GarchSpec::reference();
        let cfg = McConfig {
            sample_sizes: vec![500],
            ..small_cfg(100)
        };
        let grid = [0.1, 0.2, 0.4];
        let study = run_misspec_sweep(
            &base,
            MisspecKind::UncondVariance,
            &grid,
            &[Backtest::EsrIntercept {
                mode: EsrMode::Asymptotic,
                side: Hypothesis::TwoSided,
            }],
            &cfg,
            &mut quiet(),
        )
        .unwrap();
        assert_eq!(study.rows.len(), 3);
        let truth = study.rows.iter().find(|r| r.is_true_model).unwrap();
        assert!((truth.value - 0.2).abs() < 1e-12);
        assert!((truth.size_adjusted_rate - 0.05).abs() <= 0.01);
        assert!(run_misspec_sweep(&base, MisspecKind::UncondVariance, &[0.1, 0.4], &[HalfStub], &cfg, &mut quiet())
            .is_err());
    }
}
