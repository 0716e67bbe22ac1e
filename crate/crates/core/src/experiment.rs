//! Monte Carlo harness: parameter sweeps with an optional exact oracle,
//! per-trial diagnostics, summary tables that put each measured quantity
//! next to its predicted value or bound, and CSV/JSON output.
//!
//! Trial seeds are `trial_seed(base, cell, trial)`, so every record can be
//! regenerated on its own and the output does not depend on thread count.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{
    approx_ptas_with, approx_simple, approx_truncated_with_t, series_for, v1_of, ApproxConfig,
    Algorithm, CoefficientStrategy,
};
use crate::coefficients::truncated_series;
use crate::distributions::{builtin_distribution, mix64, sample_matrix, DistributionKind, EntryDistribution};
use crate::error::{Error, Result};
use crate::exact::{permanent_of_j_plus_za_with, permanent_ryser_with, RyserOptions};
use crate::hermite::{closed_form_estimator, vprime_sequence, SurrogateInputs};
use crate::scalars::{ln_factorial, relative_error, ComplexMatrix, LogComplex};
use crate::stats::{complex_mean_se, fraction, mean_se, median, ComplexMeanSe, MeanSe};
use crate::symmetric::{compute_v_d, ColumnStats};

const CELL_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const TRIAL_GAMMA: u64 = 0xD1B5_4A32_D192_ED03;

/// `mix64(mix64(base ^ (cell+1) G1) ^ (trial+1) G2)` with the SplitMix64
/// increment `G1` and an independent odd constant `G2`.
pub fn trial_seed(base: u64, cell: u64, trial: u64) -> u64 {
    let cell_key = mix64(base ^ cell.wrapping_add(1).wrapping_mul(CELL_GAMMA));
    mix64(cell_key ^ trial.wrapping_add(1).wrapping_mul(TRIAL_GAMMA))
}

/// Exponent `Delta` in the bound `|D_k| <= n^(-Delta k)` used by the
/// `max_dk_scaled` diagnostic.
pub const DK_DELTA: f64 = 0.15;

/// Highest `k` examined for `|D_k|`.
pub const DK_MAX: usize = 10;

/// Names of the per-trial diagnostics, in output column order.
pub const DIAGNOSTIC_COLUMNS: [&str; 5] = [
    "abs_v1",
    "abs_d2_minus_xi",
    "max_dk_scaled",
    "tail",
    "vk_vprime_gap",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmChoice {
    Truncated,
    Simple,
    Ptas,
}

impl AlgorithmChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmChoice::Truncated => "truncated",
            AlgorithmChoice::Simple => "simple",
            AlgorithmChoice::Ptas => "ptas",
        }
    }
}

impl FromStr for AlgorithmChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncated" => Ok(AlgorithmChoice::Truncated),
            "simple" => Ok(AlgorithmChoice::Simple),
            "ptas" => Ok(AlgorithmChoice::Ptas),
            other => Err(Error::InvalidParameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// A mean given either as a real number or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl MuSpec {
    pub fn value(&self) -> Complex64 {
        match *self {
            MuSpec::Real(re) => Complex64::new(re, 0.0),
            MuSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// The structural parameters of [`ApproxConfig`]; `eps` comes from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub c: f64,
    pub nu: f64,
    pub gamma: f64,
    pub beta: f64,
    pub rho_ptas: f64,
}

impl Default for ParamSet {
    fn default() -> Self {
        ParamSet {
            c: 0.10,
            nu: 0.12,
            gamma: 0.015,
            beta: 0.40,
            rho_ptas: 0.02,
        }
    }
}

impl ParamSet {
    pub fn with_eps(&self, eps: f64) -> ApproxConfig {
        ApproxConfig {
            c: self.c,
            nu: self.nu,
            gamma: self.gamma,
            beta: self.beta,
            rho_ptas: self.rho_ptas,
            eps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatistic {
    MedianRelError,
    MaxRelError,
    /// Fraction of successful trials with `rel_error <= eps`.
    FractionWithinEps,
    /// Fraction of records that carry an error.
    FailedFraction,
    /// Fraction of records with the `abs_v1` diagnostic at most
    /// `theta(n) = ln ln n`.
    V1WithinTheta,
}

/// An acceptance check evaluated over the records of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub statistic: CheckStatistic,
    #[serde(default)]
    pub algorithm: Option<AlgorithmChoice>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub passed: bool,
}

fn default_true() -> bool {
    true
}

fn default_ryser_max_n() -> usize {
    crate::exact::RYSER_MAX_N
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    pub mu: Vec<MuSpec>,
    pub eps: Vec<f64>,
    pub dist: Vec<DistributionKind>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub algorithms: Vec<AlgorithmChoice>,
    #[serde(default = "default_true")]
    pub diagnostics: bool,
    #[serde(default)]
    pub exact_oracle: bool,
    #[serde(default)]
    pub params: ParamSet,
    /// Overrides `ceil(ln n + ln(1/eps))` for the truncated algorithm.
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default = "default_ryser_max_n")]
    pub ryser_max_n: usize,
    #[serde(default)]
    pub checks: Vec<Check>,
}

/// One point of the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub mu: Complex64,
    pub eps: f64,
    pub dist: DistributionKind,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.contains(&0) {
            return Err(Error::InvalidParameter("every n must be >= 1".into()));
        }
        if self.dist.contains(&DistributionKind::Custom) {
            return Err(Error::InvalidParameter(
                "sweeps support the built-in distributions only".into(),
            ));
        }
        for &eps in &self.eps {
            self.params.with_eps(eps).validate()?;
        }
        if self.exact_oracle {
            if let Some(&n) = self.n.iter().find(|&&n| n > self.ryser_max_n) {
                return Err(Error::InvalidParameter(format!(
                    "exact oracle requested but n = {n} exceeds the Ryser limit {}",
                    self.ryser_max_n
                )));
            }
        }
        Ok(())
    }

    /// Grid cells in `n`, `mu`, `eps`, `dist` nesting order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.n {
            for mu in &self.mu {
                for &eps in &self.eps {
                    for &dist in &self.dist {
                        out.push(Cell {
                            index: out.len(),
                            n,
                            mu: mu.value(),
                            eps,
                            dist,
                        });
                    }
                }
            }
        }
        out
    }

    fn ryser(&self) -> RyserOptions {
        RyserOptions {
            max_n: self.ryser_max_n,
            ..RyserOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub n: usize,
    pub mu: Complex64,
    pub dist_kind: DistributionKind,
    pub eps: f64,
    pub algorithm: AlgorithmChoice,
    /// Which estimator actually ran (differs from `algorithm` for the PTAS).
    pub branch: Option<Algorithm>,
    pub estimate: Option<LogComplex>,
    pub exact: Option<LogComplex>,
    pub rel_error: Option<f64>,
    pub t_used: Option<usize>,
    pub diagnostics: BTreeMap<String, f64>,
    pub error: Option<String>,
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Called with `(finished, total)` trials.
    pub progress: Option<&'a (dyn Fn(usize, usize) + Sync)>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions<'_>) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&cell| (0..cfg.trials).map(move |t| (cell, t)))
        .collect();
    let done = AtomicUsize::new(0);
    let total = jobs.len();
    let work = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(cell, trial)| {
                let out = run_trial(cfg, &cell, trial);
                if let Some(progress) = opts.progress {
                    progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                }
                out
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    match opts.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

fn run_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> Vec<TrialRecord> {
    let seed = trial_seed(cfg.base_seed, cell.index as u64, trial as u64);
    let blank = TrialRecord {
        seed,
        n: cell.n,
        mu: cell.mu,
        dist_kind: cell.dist,
        eps: cell.eps,
        algorithm: AlgorithmChoice::Simple,
        branch: None,
        estimate: None,
        exact: None,
        rel_error: None,
        t_used: None,
        diagnostics: BTreeMap::new(),
        error: None,
    };
    let fail_all = |msg: String| {
        cfg.algorithms
            .iter()
            .map(|&algorithm| TrialRecord {
                algorithm,
                error: Some(msg.clone()),
                ..blank.clone()
            })
            .collect()
    };
    let sample = match builtin_distribution(cell.dist, cell.mu).and_then(|d| sample_matrix(&d, cell.n, seed)) {
        Ok(s) => s,
        Err(e) => return fail_all(e.to_string()),
    };
    let r = &sample.matrix;
    let acfg = cfg.params.with_eps(cell.eps);
    let t = cfg.t.unwrap_or_else(|| acfg.truncation(cell.n));
    let ryser = cfg.ryser();
    let exact = cfg.exact_oracle.then(|| permanent_ryser_with(r, &ryser));
    let diagnostics = if cfg.diagnostics {
        let exact_ok = exact.as_ref().and_then(|e| e.as_ref().ok()).copied();
        trial_diagnostics(r, &sample.dist, t, exact_ok, &ryser)
    } else {
        BTreeMap::new()
    };

    cfg.algorithms
        .iter()
        .map(|&algorithm| {
            let estimate = match algorithm {
                AlgorithmChoice::Truncated => {
                    approx_truncated_with_t(r, cell.mu, t, CoefficientStrategy::Auto, &ryser)
                }
                AlgorithmChoice::Simple => approx_simple(r, cell.mu, sample.dist.xi()),
                AlgorithmChoice::Ptas => approx_ptas_with(r, cell.mu, sample.dist.xi(), &acfg, &ryser),
            };
            let mut rec = TrialRecord {
                algorithm,
                diagnostics: diagnostics.clone(),
                ..blank.clone()
            };
            let est = match estimate {
                Ok(est) => est,
                Err(e) => {
                    rec.error = Some(e.to_string());
                    return rec;
                }
            };
            rec.branch = Some(est.algorithm);
            rec.t_used = est.t_used;
            rec.estimate = Some(est.value);
            match &exact {
                Some(Ok(truth)) => match relative_error(est.value, *truth) {
                    Ok(err) => {
                        rec.exact = Some(*truth);
                        rec.rel_error = Some(err);
                    }
                    Err(e) => rec.error = Some(format!("exact oracle: {e}")),
                },
                Some(Err(e)) => rec.error = Some(format!("exact oracle: {e}")),
                None => {}
            }
            rec
        })
        .collect()
}

/// Per-trial diagnostics for `R` drawn from `dist`; entries that need
/// `z = 1/mu` are skipped when `mu = 0`, and `tail` needs the exact value.
pub fn trial_diagnostics(
    r: &ComplexMatrix,
    dist: &EntryDistribution,
    t: usize,
    exact: Option<LogComplex>,
    ryser: &RyserOptions,
) -> BTreeMap<String, f64> {
    let n = r.n();
    let mu = dist.mu();
    let xi = dist.xi();
    let a = r.map(|x| x - mu);
    let mut out = BTreeMap::new();
    let m = n.min(t.max(DK_MAX));
    let Ok(stats) = compute_v_d(&a, m) else {
        return out;
    };
    out.insert("abs_v1".into(), stats.v[1].norm());
    if m >= 2 {
        out.insert("abs_d2_minus_xi".into(), (stats.d[2] - xi).norm());
    }
    if m >= 3 {
        out.insert("max_dk_scaled".into(), max_dk_scaled(&stats, DK_DELTA, DK_MAX));
    }
    if mu == Complex64::new(0.0, 0.0) {
        return out;
    }
    let z = mu.inv();
    let top = t.min(n);
    if let Ok(inp) = SurrogateInputs::new(stats.v[1], xi, z) {
        if let Ok(vp) = vprime_sequence(&inp, top) {
            let gap: f64 = (0..=top)
                .map(|k| (stats.v[k] - vp[k]).norm() * z.norm().powi(k as i32))
                .sum();
            out.insert("vk_vprime_gap".into(), gap);
        }
    }
    if let Some(truth) = exact {
        let ln_mu_n = LogComplex::from_complex(mu).powu(n as u32);
        let normalized = truth * ln_mu_n.recip().expect("mu != 0").scale_ln(-ln_factorial(n));
        if let Ok(series) = series_for(&a, top, CoefficientStrategy::Auto, ryser) {
            if let Ok(partial) = truncated_series(&series, z, top) {
                out.insert("tail".into(), (normalized.to_complex() - partial).norm());
            }
        }
    }
    out
}

/// `max_{3 <= k <= min(k_max, m)} |D_k| n^(delta k)`; values `<= 1` mean
/// every `|D_k| <= n^(-delta k)`.
pub fn max_dk_scaled(stats: &ColumnStats, delta: f64, k_max: usize) -> f64 {
    let ln_n = (stats.n as f64).ln();
    (3..=k_max.min(stats.m()))
        .map(|k| stats.d[k].norm() * (delta * k as f64 * ln_n).exp())
        .fold(0.0, f64::max)
}

pub fn evaluate_checks(checks: &[Check], records: &[TrialRecord]) -> Vec<CheckOutcome> {
    checks
        .iter()
        .map(|check| {
            let rows: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| check.algorithm.is_none_or(|a| a == r.algorithm))
                .filter(|r| check.n.is_none_or(|n| n == r.n))
                .collect();
            let errs: Vec<f64> = rows.iter().filter_map(|r| r.rel_error).collect();
            let value = match check.statistic {
                CheckStatistic::MedianRelError => median(&errs),
                CheckStatistic::MaxRelError => errs.iter().copied().fold(f64::NAN, f64::max),
                CheckStatistic::FractionWithinEps => fraction(
                    rows.iter()
                        .filter_map(|r| r.rel_error.map(|e| e <= r.eps)),
                ),
                CheckStatistic::FailedFraction => fraction(rows.iter().map(|r| r.error.is_some())),
                CheckStatistic::V1WithinTheta => fraction(rows.iter().filter_map(|r| {
                    r.diagnostics
                        .get("abs_v1")
                        .map(|&v| v <= ApproxConfig::theta(r.n))
                })),
            };
            let passed = !value.is_nan()
                && check.max.is_none_or(|m| value <= m)
                && check.min.is_none_or(|m| value >= m);
            CheckOutcome {
                name: check.name.clone(),
                value,
                passed,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

/// Fixed leading CSV columns; `diag_*` columns and `branch,t_used,error`
/// follow.
pub const CSV_COLUMNS: [&str; 12] = [
    "seed",
    "n",
    "mu_re",
    "mu_im",
    "dist",
    "eps",
    "algorithm",
    "log_mag",
    "phase",
    "exact_log_mag",
    "exact_phase",
    "rel_error",
];

pub fn csv_header() -> Vec<String> {
    CSV_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(DIAGNOSTIC_COLUMNS.iter().map(|d| format!("diag_{d}")))
        .chain(["branch", "t_used", "error"].iter().map(|s| s.to_string()))
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn log_parts(v: Option<LogComplex>) -> (String, String) {
    match v {
        None => (String::new(), String::new()),
        Some(w) if w.is_zero => ("-inf".into(), "0".into()),
        Some(w) => (num(w.log_mag), num(w.phase)),
    }
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header())?;
    for r in records {
        let (lm, ph) = log_parts(r.estimate);
        let (elm, eph) = log_parts(r.exact);
        let mut row = vec![
            r.seed.to_string(),
            r.n.to_string(),
            num(r.mu.re),
            num(r.mu.im),
            r.dist_kind.to_string(),
            num(r.eps),
            r.algorithm.as_str().to_string(),
            lm,
            ph,
            elm,
            eph,
            r.rel_error.map(num).unwrap_or_default(),
        ];
        row.extend(
            DIAGNOSTIC_COLUMNS
                .iter()
                .map(|d| r.diagnostics.get(*d).copied().map(num).unwrap_or_default()),
        );
        row.push(opt(r.branch.map(|b| b.as_str())));
        row.push(opt(r.t_used));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, records)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_results(records: &[TrialRecord], path: &Path, format: OutputFormat) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(records, file),
        OutputFormat::Json => write_json(records, file),
    }
}

pub fn read_results_json(path: &Path) -> Result<Vec<TrialRecord>> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// Centered matrix `A` of trial `trial` in a diagnostic run keyed by `seed`.
fn diagnostic_sample(dist: &EntryDistribution, n: usize, seed: u64, trial: usize) -> Result<ComplexMatrix> {
    let s = sample_matrix(dist, n, trial_seed(seed, 0, trial as u64))?;
    Ok(s.matrix.map(|x| x - dist.mu()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AkMomentRow {
    pub k: usize,
    /// Empirical `E[a_k]`.
    pub mean: ComplexMeanSe,
    pub predicted_mean: Complex64,
    /// Empirical `E|a_k|^2`.
    pub second_moment: MeanSe,
    /// `1 / k!`.
    pub predicted_second_moment: f64,
    /// Empirical `E|V_k - a_k|^2`.
    pub vk_gap: MeanSe,
    /// `k (k-1) / (2 n k!)`.
    pub vk_gap_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AkMomentsTable {
    pub n: usize,
    pub trials: usize,
    pub rows: Vec<AkMomentRow>,
}

/// Moments of `a_k` and of `V_k - a_k` over centered matrices from `dist`.
pub fn diagnostic_ak_moments(
    n: usize,
    k_max: usize,
    trials: usize,
    dist: &EntryDistribution,
    seed: u64,
) -> Result<AkMomentsTable> {
    if k_max > n {
        return Err(Error::InvalidParameter(format!("k_max = {k_max} exceeds n = {n}")));
    }
    let per_trial: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = diagnostic_sample(dist, n, seed, i)?;
            let series = series_for(&a, k_max, CoefficientStrategy::Auto, &RyserOptions::default())?;
            let stats = compute_v_d(&a, k_max)?;
            Ok((series.coeffs, stats.v))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..=k_max)
        .map(|k| {
            let ak: Vec<Complex64> = per_trial.iter().map(|(a, _)| a[k]).collect();
            let sq: Vec<f64> = ak.iter().map(|w| w.norm_sqr()).collect();
            let gap: Vec<f64> = per_trial.iter().map(|(a, v)| (v[k] - a[k]).norm_sqr()).collect();
            let inv_fact = (-ln_factorial(k)).exp();
            AkMomentRow {
                k,
                mean: complex_mean_se(&ak),
                predicted_mean: Complex64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0),
                second_moment: mean_se(&sq),
                predicted_second_moment: inv_fact,
                vk_gap: mean_se(&gap),
                vk_gap_bound: (k * k.saturating_sub(1)) as f64 / (2.0 * n as f64) * inv_fact,
            }
        })
        .collect();
    Ok(AkMomentsTable { n, trials, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub n: usize,
    pub mu: Complex64,
    pub eps: f64,
    pub t: usize,
    /// `n^(-gamma) eps`.
    pub bound: f64,
    /// `|Per(J+zA)/n! - sum_{k<=t} a_k z^k|` per trial.
    pub tails: Vec<f64>,
    pub fraction_within: f64,
}

/// Realized tail of the truncated series against the exact normalized
/// permanent. `t` defaults to `cfg.truncation(n)`.
pub fn diagnostic_tail(
    n: usize,
    mu: Complex64,
    cfg: &ApproxConfig,
    t: Option<usize>,
    trials: usize,
    dist: &EntryDistribution,
    seed: u64,
) -> Result<TailTable> {
    cfg.validate()?;
    if mu == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroMean);
    }
    let z = mu.inv();
    let t = t.unwrap_or_else(|| cfg.truncation(n)).min(n);
    let ryser = RyserOptions::default();
    let inv_fact = (-ln_factorial(n)).exp();
    let tails = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = diagnostic_sample(&dist.with_mu(mu), n, seed, i)?;
            let full = permanent_of_j_plus_za_with(&a, z, &ryser)?.to_complex() * inv_fact;
            let series = series_for(&a, t, CoefficientStrategy::Auto, &ryser)?;
            Ok((full - truncated_series(&series, z, t)?).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let bound = (n as f64).powf(-cfg.gamma) * cfg.eps;
    Ok(TailTable {
        n,
        mu,
        eps: cfg.eps,
        t,
        bound,
        fraction_within: fraction(tails.iter().map(|&x| x <= bound)),
        tails,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VkGapRow {
    /// `|sum_{k<=t} (a_k - V_k) z^k|`, when the coefficients are affordable.
    pub a_gap: Option<f64>,
    /// `eps_k = |V_k - V'_k|` for `k = 0 ..= t`.
    pub eps_k: Vec<f64>,
    /// `|sum_{k<=t} (V_k - V'_k) z^k|`, when `mu != 0`.
    pub v_vprime_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VkGapTable {
    pub n: usize,
    pub mu: Complex64,
    pub t: usize,
    pub rows: Vec<VkGapRow>,
    pub median_eps_k: Vec<f64>,
    /// `n^(-nu) k^(-nu k)`.
    pub eps_k_bound: Vec<f64>,
    pub median_a_gap: Option<f64>,
    /// `n^(-beta)`.
    pub a_gap_bound: f64,
    pub median_v_vprime_gap: Option<f64>,
    /// `n^(c - nu)`, up to the unspecified constant.
    pub v_vprime_gap_rate: f64,
}

/// Gaps between `a_k`, `V_k` and `V'_k`. With `mu = 0` only `eps_k` is
/// reported (there is no `z`).
pub fn diagnostic_vk_gap(
    n: usize,
    mu: Complex64,
    t: usize,
    cfg: &ApproxConfig,
    trials: usize,
    dist: &EntryDistribution,
    seed: u64,
) -> Result<VkGapTable> {
    let t = t.min(n);
    let zero = Complex64::new(0.0, 0.0);
    let z = (mu != zero).then(|| mu.inv());
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = diagnostic_sample(&dist.with_mu(mu), n, seed, i)?;
            let stats = compute_v_d(&a, t)?;
            let inp = SurrogateInputs::new(stats.v[1], dist.xi(), z.unwrap_or(zero))?;
            let vp = vprime_sequence(&inp, t)?;
            let eps_k: Vec<f64> = (0..=t).map(|k| (stats.v[k] - vp[k]).norm()).collect();
            let horner = |coeffs: &[Complex64], z: Complex64| {
                coeffs.iter().rev().fold(zero, |acc, &c| acc * z + c)
            };
            let v_vprime_gap = z.map(|z| {
                let diff: Vec<Complex64> = (0..=t).map(|k| stats.v[k] - vp[k]).collect();
                horner(&diff, z).norm()
            });
            let a_gap = z.and_then(|z| {
                let series = series_for(&a, t, CoefficientStrategy::Auto, &RyserOptions::default()).ok()?;
                let diff: Vec<Complex64> = (0..=t).map(|k| series.coeffs[k] - stats.v[k]).collect();
                Some(horner(&diff, z).norm())
            });
            Ok(VkGapRow {
                a_gap,
                eps_k,
                v_vprime_gap,
            })
        })
        .collect::<Result<Vec<VkGapRow>>>()?;
    let nf = n as f64;
    let median_of = |f: &dyn Fn(&VkGapRow) -> Option<f64>| {
        let xs: Vec<f64> = rows.iter().filter_map(f).collect();
        (!xs.is_empty()).then(|| median(&xs))
    };
    Ok(VkGapTable {
        n,
        mu,
        t,
        median_eps_k: (0..=t)
            .map(|k| median(&rows.iter().map(|r| r.eps_k[k]).collect::<Vec<_>>()))
            .collect(),
        eps_k_bound: (0..=t)
            .map(|k| {
                let kf = k as f64;
                let decay = if k == 0 { 1.0 } else { kf.powf(-cfg.nu * kf) };
                nf.powf(-cfg.nu) * decay
            })
            .collect(),
        median_a_gap: median_of(&|r| r.a_gap),
        a_gap_bound: nf.powf(-cfg.beta),
        median_v_vprime_gap: median_of(&|r| r.v_vprime_gap),
        v_vprime_gap_rate: nf.powf(cfg.c - cfg.nu),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMagnitudeTable {
    pub n: usize,
    pub mu: Complex64,
    /// `n^(-gamma)`.
    pub threshold: f64,
    /// `|exp(V_1 z - xi z^2 / 2)|` per trial.
    pub magnitudes: Vec<f64>,
    pub fraction_above: f64,
}

pub fn diagnostic_estimator_magnitude(
    n: usize,
    mu: Complex64,
    gamma: f64,
    trials: usize,
    dist: &EntryDistribution,
    seed: u64,
) -> Result<EstimatorMagnitudeTable> {
    if mu == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroMean);
    }
    let dist = dist.with_mu(mu);
    let magnitudes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let r = sample_matrix(&dist, n, trial_seed(seed, 0, i as u64))?.matrix;
            let inp = SurrogateInputs::new(v1_of(&r, mu), dist.xi(), mu.inv())?;
            Ok(closed_form_estimator(&inp).log_mag.exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    let threshold = (n as f64).powf(-gamma);
    Ok(EstimatorMagnitudeTable {
        n,
        mu,
        threshold,
        fraction_above: fraction(magnitudes.iter().map(|&m| m >= threshold)),
        magnitudes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DConcentrationTable {
    pub n: usize,
    pub delta: f64,
    pub k_max: usize,
    /// `|D_2 - xi|` per trial.
    pub d2_gaps: Vec<f64>,
    pub median_d2_gap: f64,
    /// `max_{3<=k<=k_max} |D_k| n^(delta k)` per trial.
    pub dk_scaled: Vec<f64>,
    /// Fraction of trials with every `|D_k| <= n^(-delta k)`.
    pub fraction_dk_within: f64,
}

/// Concentration of `D_2` at `xi` and smallness of `D_k`, `k >= 3`.
pub fn diagnostic_d_concentration(
    n: usize,
    delta: f64,
    k_max: usize,
    trials: usize,
    dist: &EntryDistribution,
    seed: u64,
) -> Result<DConcentrationTable> {
    let m = k_max.min(n);
    if m < 2 {
        return Err(Error::InvalidParameter("need n >= 2 and k_max >= 2".into()));
    }
    let per: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = diagnostic_sample(dist, n, seed, i)?;
            let stats = compute_v_d(&a, m)?;
            Ok(((stats.d[2] - dist.xi()).norm(), max_dk_scaled(&stats, delta, m)))
        })
        .collect::<Result<Vec<_>>>()?;
    let d2_gaps: Vec<f64> = per.iter().map(|p| p.0).collect();
    let dk_scaled: Vec<f64> = per.iter().map(|p| p.1).collect();
    Ok(DConcentrationTable {
        n,
        delta,
        k_max: m,
        median_d2_gap: median(&d2_gaps),
        fraction_dk_within: fraction(dk_scaled.iter().map(|&s| s <= 1.0)),
        d2_gaps,
        dk_scaled,
    })
}
