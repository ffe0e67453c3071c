//! Seeded Monte Carlo experiments.
//!
//! A run draws one dataset, evaluates each requested algorithm `R` times
//! under stochastic rounding (trial `t` of algorithm `a` uses stream
//! `(master_seed, t << 8 | lane(a))`), optionally once under RN, and compares
//! every result to the exact rational oracle. Trials may execute on any
//! number of threads; results are gathered and folded in trial order, so
//! output is bit-identical regardless of parallelism.

use num::{BigInt, BigRational, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{self, Algorithm, RunOutput, SummationScheme, VarianceKind};
use crate::bounds::{self, BoundMethod, BoundQuery};
use crate::error::{Error, Result};
use crate::fp::{FpFormat, FpValue, RoundingContext};
use crate::oracle::{empirical_moments, relative_error, ConditionReport, ExactMoments, ExactValue};
use crate::rng::{stream_id, StreamRng};

/// Stream reserved for dataset generation.
const DATASET_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    #[serde(default)]
    pub distribution: Distribution,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn uniform(lo: f64, hi: f64, n: usize, seed: u64) -> Self {
        Self {
            distribution: Distribution::Uniform,
            lo,
            hi,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Config(format!(
                "dataset interval [{}, {}] must be finite with lo < hi",
                self.lo, self.hi
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("dataset size n must be at least 1".into()));
        }
        Ok(())
    }
}

/// `n` uniform draws on `[lo, hi)`, each projected onto the grid of `fmt`
/// with round-to-nearest.
pub fn generate_dataset(spec: &DatasetSpec, fmt: FpFormat) -> Result<Vec<FpValue>> {
    spec.validate()?;
    let mut rng = StreamRng::new(spec.seed, DATASET_STREAM);
    let width = spec.hi - spec.lo;
    (0..spec.n)
        .map(|_| fmt.quantize(spec.lo + width * rng.unit()))
        .collect()
}

fn default_repetitions() -> usize {
    30
}

fn default_lambdas() -> Vec<f64> {
    vec![0.1]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub precision: FpFormat,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    pub master_seed: u64,
    #[serde(default = "default_true")]
    pub include_rn: bool,
    /// Worker threads for trials: 0 uses the global pool, 1 runs serially.
    #[serde(default)]
    pub threads: usize,
}

impl ExperimentConfig {
    /// Thirty repetitions in binary32 with `lambda = 0.1`, RN included.
    pub fn new(dataset: DatasetSpec, algorithms: Vec<Algorithm>, master_seed: u64) -> Self {
        Self {
            dataset,
            precision: FpFormat::BINARY32,
            repetitions: default_repetitions(),
            algorithms,
            lambdas: default_lambdas(),
            master_seed,
            include_rn: true,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.repetitions == 0 && !self.include_rn {
            return Err(Error::Config(
                "repetitions must be at least 1 unless the RN run is included".into(),
            ));
        }
        if let Some(&l) = self.lambdas.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::Config(format!("lambda {l} is outside (0, 1)")));
        }
        Ok(())
    }
}

/// Bound methods that apply to each algorithm.
pub fn applicable_bounds(alg: Algorithm) -> &'static [BoundMethod] {
    use BoundMethod::*;
    use SummationScheme::*;
    match alg {
        Algorithm::Sum(Recursive) => &[BcRecursiveSum, AhRecursiveSum],
        Algorithm::Sum(Pairwise) => &[BcPairwiseSum, AhPairwiseSum, HiPairwiseSum],
        Algorithm::Variance(v) => match (v.kind, v.scheme) {
            (VarianceKind::Textbook, Recursive) => {
                &[DetTextbook, BcTextbook, AhTextbook, DmTextbook]
            }
            (VarianceKind::Textbook, Pairwise) => &[BcPairwiseTextbook, AhPairwiseTextbook],
            (VarianceKind::TwoPass, Recursive) => &[BcTwopass, AhTwopass],
            (VarianceKind::TwoPass, Pairwise) => &[BcPairwiseTwopass, AhPairwiseTwopass],
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub n: usize,
    pub trial_index: u64,
    pub value: f64,
    /// Absent when the exact value is zero.
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCoverage {
    pub method: BoundMethod,
    /// `None` for deterministic bounds.
    pub lambda: Option<f64>,
    pub value: f64,
    pub holds_with_probability: f64,
    pub by_analogy: bool,
    /// Fraction of SR trials whose relative error is at most `value`;
    /// `None` when there were no trials or the exact value is zero.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub algorithm: Algorithm,
    pub n: usize,
    pub precision: u32,
    pub u: f64,
    pub repetitions: usize,
    pub exact: f64,
    /// Mean of the `R` computed values and its relative error.
    pub mean_value: Option<f64>,
    pub mean_rel_error: Option<f64>,
    /// Average of the per-trial relative errors.
    pub trial_rel_error_mean: Option<f64>,
    pub rn_value: Option<f64>,
    pub rn_rel_error: Option<f64>,
    pub conditions: ConditionReport,
    /// `mean(value) - exact` and its standard error.
    pub bias: Option<f64>,
    pub bias_stderr: Option<f64>,
    /// Empirical variance of the computed sum: `V(s_hat)` for sums and the
    /// textbook algorithm, `n^2 V(m_hat)` for two-pass.
    pub var_sum_hat: Option<f64>,
    /// `-V/n` (textbook) or `+V/n` (two-pass), from `var_sum_hat`.
    pub predicted_bias: Option<f64>,
    pub bounds: Vec<BoundCoverage>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub trials: Vec<TrialRecord>,
    pub summaries: Vec<SummaryRecord>,
}

impl ExperimentOutput {
    fn extend(&mut self, other: ExperimentOutput) {
        self.trials.extend(other.trials);
        self.summaries.extend(other.summaries);
    }
}

/// Evaluates `f(0..r)` on `threads` workers, returning results in index
/// order.
fn map_trials<T, F>(r: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    match threads {
        1 => (0..r as u64).map(f).collect(),
        0 => (0..r as u64).into_par_iter().map(f).collect(),
        t => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| (0..r as u64).into_par_iter().map(f).collect()),
    }
}

/// Oracle quantities computed once per dataset.
struct Reference {
    sum: ExactValue,
    variance: ExactValue,
    conditions: ConditionReport,
}

impl Reference {
    fn new(data: &[FpValue]) -> Result<Self> {
        let m = ExactMoments::from_values(data);
        Ok(Self {
            sum: m.sum(),
            variance: m.variance()?,
            conditions: m.condition_numbers(),
        })
    }

    fn target(&self, alg: Algorithm) -> &ExactValue {
        if alg.is_sum() {
            &self.sum
        } else {
            &self.variance
        }
    }
}

struct SrSamples {
    values: Vec<f64>,
    aux: Vec<f64>,
    errors: Vec<Option<f64>>,
}

fn run_sr(
    alg: Algorithm,
    data: &[FpValue],
    cfg: &ExperimentConfig,
    target: &ExactValue,
) -> Result<SrSamples> {
    let lane = alg.lane();
    let outs: Vec<(RunOutput, Option<f64>)> = map_trials(cfg.repetitions, cfg.threads, |t| {
        let mut ctx = RoundingContext::stochastic(cfg.master_seed, stream_id(t, lane));
        let out = alg.run(data, cfg.precision, &mut ctx)?;
        let err = relative_error(out.value.get(), target).ok();
        Ok((out, err))
    })?;
    Ok(SrSamples {
        values: outs.iter().map(|(o, _)| o.value.get()).collect(),
        aux: outs.iter().map(|(o, _)| o.aux.get()).collect(),
        errors: outs.into_iter().map(|(_, e)| e).collect(),
    })
}

/// Runs one experiment: `R` SR trials per algorithm, the optional RN run,
/// oracle errors, bound values and their empirical coverage.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let data = generate_dataset(&cfg.dataset, cfg.precision)?;
    let reference = Reference::new(&data)?;
    let mut out = ExperimentOutput::default();
    for &alg in &cfg.algorithms {
        let (trials, summary) = summarize(alg, &data, cfg, &reference)?;
        out.trials.extend(trials);
        out.summaries.push(summary);
    }
    Ok(out)
}

fn summarize(
    alg: Algorithm,
    data: &[FpValue],
    cfg: &ExperimentConfig,
    reference: &Reference,
) -> Result<(Vec<TrialRecord>, SummaryRecord)> {
    let n = data.len();
    let fmt = cfg.precision;
    let u = fmt.unit_roundoff();
    let target = reference.target(alg);
    let exact_zero = target.is_zero();
    let c = reference.conditions;
    let mut flags = Vec::new();
    if exact_zero {
        flags.push("exact_zero".to_string());
    }

    let sr = run_sr(alg, data, cfg, target)?;
    let trials: Vec<TrialRecord> = sr
        .values
        .iter()
        .zip(&sr.errors)
        .enumerate()
        .map(|(t, (&value, &rel_error))| TrialRecord {
            algorithm: alg,
            n,
            trial_index: t as u64,
            value,
            rel_error,
        })
        .collect();

    let r = sr.values.len();
    let mean_value = (r > 0).then(|| sr.values.iter().sum::<f64>() / r as f64);
    let mean_rel_error = mean_value.and_then(|m| relative_error(m, target).ok());
    let trial_rel_error_mean = (r > 0 && !exact_zero)
        .then(|| sr.errors.iter().map(|e| e.unwrap_or(0.0)).sum::<f64>() / r as f64);

    let (rn_value, rn_rel_error) = if cfg.include_rn {
        let mut ctx = RoundingContext::nearest();
        let v = alg.run(data, fmt, &mut ctx)?.value.get();
        (Some(v), relative_error(v, target).ok())
    } else {
        (None, None)
    };

    let exact_f = target.to_f64();
    let (bias, bias_stderr) = match empirical_moments(&sr.values) {
        Ok(m) => (Some(m.mean - exact_f), Some(m.stderr)),
        Err(_) => (None, None),
    };
    let var_sum_hat = match alg {
        Algorithm::Variance(v) if v.kind == VarianceKind::TwoPass => {
            let scaled: Vec<f64> = sr.aux.iter().map(|m| m * n as f64).collect();
            empirical_moments(&scaled).ok().map(|m| m.variance)
        }
        _ => empirical_moments(&sr.aux).ok().map(|m| m.variance),
    };
    let predicted_bias = match alg {
        Algorithm::Variance(v) => var_sum_hat.map(|vs| match v.kind {
            VarianceKind::Textbook => -vs / n as f64,
            VarianceKind::TwoPass => vs / n as f64,
        }),
        Algorithm::Sum(_) => Some(0.0),
    };

    let mut bound_rows = Vec::new();
    let base = BoundQuery::new(n as u64, u, 0.1)
        .with_kappa(c.kappa)
        .with_k(c.k1, c.k2);
    for &method in applicable_bounds(alg) {
        let lambdas: Vec<Option<f64>> = if method.is_probabilistic() {
            cfg.lambdas.iter().map(|&l| Some(l)).collect()
        } else {
            vec![None]
        };
        for lambda in lambdas {
            let q = base.with_lambda(lambda.unwrap_or(0.5));
            match method.evaluate(&q) {
                Ok(b) => {
                    let coverage = (r > 0 && !exact_zero).then(|| {
                        let hits = sr
                            .errors
                            .iter()
                            .filter(|e| e.is_some_and(|e| e <= b.value))
                            .count();
                        hits as f64 / r as f64
                    });
                    bound_rows.push(BoundCoverage {
                        method,
                        lambda,
                        value: b.value,
                        holds_with_probability: b.holds_with_probability,
                        by_analogy: b.by_analogy,
                        coverage,
                    });
                }
                Err(Error::UndefinedBound(name)) => {
                    let flag = format!("{method}:undefined_{name}");
                    if !flags.contains(&flag) {
                        flags.push(flag);
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    let summary = SummaryRecord {
        algorithm: alg,
        n,
        precision: fmt.precision(),
        u,
        repetitions: r,
        exact: exact_f,
        mean_value,
        mean_rel_error,
        trial_rel_error_mean,
        rn_value,
        rn_rel_error,
        conditions: c,
        bias,
        bias_stderr,
        var_sum_hat,
        predicted_bias,
        bounds: bound_rows,
        flags,
    };
    Ok((trials, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepGrid {
    /// Dataset sizes; the dataset seed is kept, so smaller datasets are
    /// prefixes of larger ones.
    N(Vec<usize>),
    Lambda(Vec<f64>),
}

/// One experiment per grid point (a single run for a λ grid, since trials
/// do not depend on λ).
pub fn coverage_sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<ExperimentOutput> {
    match grid {
        SweepGrid::N(ns) => {
            if ns.is_empty() {
                return Err(Error::Config("empty n grid".into()));
            }
            let mut out = ExperimentOutput::default();
            for &n in ns {
                let mut cfg = base.clone();
                cfg.dataset.n = n;
                out.extend(run_experiment(&cfg)?);
            }
            Ok(out)
        }
        SweepGrid::Lambda(ls) => {
            if ls.is_empty() {
                return Err(Error::Config("empty lambda grid".into()));
            }
            let mut cfg = base.clone();
            cfg.lambdas = ls.clone();
            run_experiment(&cfg)
        }
    }
}

/// Textbook and two-pass (recursive summation) with the RN run, over an
/// n grid: the data behind the stagnation comparison.
pub fn stagnation_demo(base: &ExperimentConfig, ns: &[usize]) -> Result<Vec<SummaryRecord>> {
    let mut cfg = base.clone();
    cfg.algorithms = vec![
        Algorithm::textbook(SummationScheme::Recursive),
        Algorithm::two_pass(SummationScheme::Recursive),
    ];
    cfg.include_rn = true;
    Ok(coverage_sweep(&cfg, &SweepGrid::N(ns.to_vec()))?.summaries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasEstimate {
    /// `mean(computed) - exact`.
    pub bias: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    pub n: usize,
    pub precision: u32,
    pub u: f64,
    pub repetitions: usize,
    pub scheme: SummationScheme,
    pub exact_sum: f64,
    pub exact_variance: f64,
    pub k1: f64,
    pub sum: BiasEstimate,
    /// Plain `mean(y_hat) - y`.
    pub textbook: BiasEstimate,
    /// The same bias estimated from `y_hat - (q_hat - q) + (2s/n)(s_hat - s)`,
    /// where `q_hat` and `s_hat` are the trial's own computed sums of squares
    /// and values. Both corrections have mean exactly zero under SR, so the
    /// expectation is unchanged while the first-order noise cancels.
    pub textbook_controlled: BiasEstimate,
    pub twopass: BiasEstimate,
    /// Empirical `V(s_hat)` from the sum trials.
    pub var_sum_hat: f64,
    pub predicted_textbook_bias: f64,
    pub predicted_twopass_bias: f64,
    pub textbook_bias_bound: f64,
    pub twopass_bias_bound: f64,
    /// Textbook bias (controlled estimate) below zero by at least three
    /// standard errors.
    pub textbook_negative: bool,
    /// Two-pass bias above zero by at least three standard errors.
    pub twopass_positive: bool,
    /// Sum bias within four standard errors of zero.
    pub sum_unbiased: bool,
    /// `| |b_text| - |b_two| | <= 2 sqrt(se_text^2 + se_two^2)`, using the
    /// controlled textbook estimate.
    pub magnitudes_agree: bool,
}

/// Minimum repetitions for a bias run: the bias is `O(n u^2)`.
pub const MIN_BIAS_REPETITIONS: usize = 1000;

/// Measures the bias of the computed sum, textbook and two-pass variances.
/// The summation scheme is taken from the first algorithm in `cfg`.
pub fn empirical_bias(cfg: &ExperimentConfig) -> Result<BiasReport> {
    cfg.validate()?;
    if cfg.repetitions < MIN_BIAS_REPETITIONS {
        return Err(Error::Config(format!(
            "bias estimation needs at least {MIN_BIAS_REPETITIONS} repetitions, got {}",
            cfg.repetitions
        )));
    }
    let scheme = cfg
        .algorithms
        .first()
        .map(|a| a.scheme())
        .unwrap_or(SummationScheme::Recursive);
    let fmt = cfg.precision;
    let u = fmt.unit_roundoff();
    let data = generate_dataset(&cfg.dataset, fmt)?;
    let n = data.len();
    let reference = Reference::new(&data)?;

    let estimate = |alg: Algorithm| -> Result<(BiasEstimate, Vec<f64>)> {
        let target = reference.target(alg);
        let sr = run_sr(alg, &data, cfg, target)?;
        let m = empirical_moments(&sr.values)?;
        Ok((
            BiasEstimate {
                bias: m.mean - target.to_f64(),
                stderr: m.stderr,
            },
            sr.values,
        ))
    };
    let (sum, sums) = estimate(Algorithm::Sum(scheme))?;
    let (textbook, _) = estimate(Algorithm::textbook(scheme))?;
    let (twopass, _) = estimate(Algorithm::two_pass(scheme))?;
    let var_sum_hat = empirical_moments(&sums)?.variance;

    let y = reference.variance.to_f64();
    let s = reference.sum.to_f64();
    let q = (reference.variance.as_ratio()
        + reference.sum.as_ratio() * reference.sum.as_ratio()
            / BigRational::from_integer(BigInt::from(n)))
    .to_f64()
    .unwrap_or(f64::INFINITY);
    let lane = Algorithm::textbook(scheme).lane();
    let controlled: Vec<f64> = map_trials(cfg.repetitions, cfg.threads, |t| {
        let mut ctx = RoundingContext::stochastic(cfg.master_seed, stream_id(t, lane));
        let p = algorithms::textbook_variance_parts(&data, fmt, &mut ctx, scheme)?;
        Ok(p.value.get() - (p.sum_squares.get() - q) + 2.0 * s / n as f64 * (p.sum.get() - s))
    })?;
    let cm = empirical_moments(&controlled)?;
    let textbook_controlled = BiasEstimate {
        bias: cm.mean - y,
        stderr: cm.stderr,
    };
    let k1 = reference.conditions.k1;
    let nn = n as u64;
    let (tb_bound, tp_bound) = if y > 0.0 {
        (
            bounds::textbook_bias_prediction(nn, u, y, k1, None)?.bound,
            bounds::twopass_bias_prediction(nn, u, y, k1, None)?.bound,
        )
    } else {
        (0.0, 0.0)
    };
    let tc = textbook_controlled;
    let combined = (tc.stderr.powi(2) + twopass.stderr.powi(2)).sqrt();
    Ok(BiasReport {
        n,
        precision: fmt.precision(),
        u,
        repetitions: cfg.repetitions,
        scheme,
        exact_sum: reference.sum.to_f64(),
        exact_variance: y,
        k1,
        sum,
        textbook,
        textbook_controlled,
        twopass,
        var_sum_hat,
        predicted_textbook_bias: -var_sum_hat / n as f64,
        predicted_twopass_bias: var_sum_hat / n as f64,
        textbook_bias_bound: tb_bound,
        twopass_bias_bound: tp_bound,
        textbook_negative: tc.bias < -3.0 * tc.stderr,
        twopass_positive: twopass.bias > 3.0 * twopass.stderr,
        sum_unbiased: sum.bias.abs() <= 4.0 * sum.stderr,
        magnitudes_agree: (tc.bias.abs() - twopass.bias.abs()).abs() <= 2.0 * combined,
    })
}
