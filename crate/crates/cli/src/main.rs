use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use permanent_core::approx::{approx_ptas, approx_simple, approx_truncated, approx_truncated_with_t};
use permanent_core::exact::RyserOptions;
use permanent_core::experiment::{
    diagnostic_ak_moments, diagnostic_d_concentration, diagnostic_estimator_magnitude,
    diagnostic_tail, diagnostic_vk_gap, evaluate_checks, run_experiment_with, write_results,
    ExperimentConfig, OutputFormat, RunOptions, DK_DELTA, DK_MAX,
};
use permanent_core::{
    builtin_distribution, coefficients_interpolation, coefficients_submatrix, compute_v_d,
    default_config, permanent_naive, permanent_ryser, sample_matrix, CoefficientStrategy, Complex64,
    ComplexMatrix, DistributionKind, LogComplex,
};

#[derive(Parser)]
#[command(name = "permapprox", version, about = "Exact and approximate permanents of random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact permanent of a matrix file.
    Exact {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum, default_value = "ryser")]
        method: ExactMethod,
    },
    /// Expansion coefficients a_0..a_k of Per(J + zA)/n!.
    Coeffs {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum, default_value = "interpolation")]
        method: CoeffMethod,
        /// Highest k (submatrix method only; defaults to n).
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Column sums and the V_k, D_k statistics of a (centered) matrix.
    Stats {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        m: usize,
    },
    /// Approximate the permanent of a matrix with entry mean mu.
    Approx {
        #[arg(long)]
        matrix: PathBuf,
        /// `RE` or `RE,IM`.
        #[arg(long, value_parser = parse_complex)]
        mu: Complex64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, value_enum, default_value = "truncated")]
        algorithm: AlgorithmArg,
        /// Quasi-variance of the entries; taken from `--dist` when omitted.
        #[arg(long, value_parser = parse_complex)]
        xi: Option<Complex64>,
        #[arg(long)]
        dist: Option<DistributionKind>,
        /// Truncation order for the truncated algorithm.
        #[arg(long)]
        t: Option<usize>,
    },
    /// Draw a matrix from a built-in distribution.
    Sample {
        #[arg(long)]
        dist: DistributionKind,
        #[arg(long, value_parser = parse_complex)]
        mu: Complex64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        progress: bool,
    },
    /// Print one diagnostic table as JSON.
    Diagnose {
        #[arg(value_enum)]
        table: Table,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "real-gaussian")]
        dist: DistributionKind,
        #[arg(long, value_parser = parse_complex, default_value = "1")]
        mu: Complex64,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// k_max for ak-moments, t for tail and vk-gap.
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactMethod {
    Ryser,
    Naive,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoeffMethod {
    Submatrix,
    #[value(alias = "interp")]
    Interpolation,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Truncated,
    Simple,
    Ptas,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    AkMoments,
    Tail,
    VkGap,
    EstimatorMagnitude,
    DConcentration,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected RE or RE,IM, got `{s}`")),
    }
}

fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing matrix {}", path.display()))
}

fn log_json(w: LogComplex) -> serde_json::Value {
    let value = w.to_complex_checked();
    json!({
        "is_zero": w.is_zero,
        "log_mag": if w.is_zero { None } else { Some(w.log_mag) },
        "phase": if w.is_zero { None } else { Some(w.phase) },
        "re": value.map(|v| v.re),
        "im": value.map(|v| v.im),
    })
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Exact { matrix, method } => {
            let m = read_matrix(&matrix)?;
            let per = match method {
                ExactMethod::Ryser => permanent_ryser(&m)?,
                ExactMethod::Naive => permanent_naive(&m)?,
            };
            print_json(&log_json(per))?;
        }
        Command::Coeffs { matrix, method, k_max } => {
            let a = read_matrix(&matrix)?;
            let series = match method {
                CoeffMethod::Interpolation => {
                    if k_max.is_some() {
                        bail!("--k-max applies to the submatrix method only");
                    }
                    coefficients_interpolation(&a)?
                }
                CoeffMethod::Submatrix => {
                    let k = k_max.unwrap_or(a.n());
                    coefficients_submatrix(&a, k, permanent_core::coefficients::COEFFICIENT_BUDGET)?
                }
            };
            let pairs: Vec<[f64; 2]> = series.coeffs.iter().map(|c| [c.re, c.im]).collect();
            print_json(&pairs)?;
        }
        Command::Stats { matrix, m } => {
            let a = read_matrix(&matrix)?;
            print_json(&compute_v_d(&a, m)?)?;
        }
        Command::Approx {
            matrix,
            mu,
            eps,
            algorithm,
            xi,
            dist,
            t,
        } => {
            let r = read_matrix(&matrix)?;
            let xi = match (xi, dist) {
                (Some(xi), _) => Some(xi),
                (None, Some(kind)) => Some(builtin_distribution(kind, mu)?.xi()),
                (None, None) => None,
            };
            let cfg = default_config(eps)?;
            let est = match algorithm {
                AlgorithmArg::Truncated => match t {
                    Some(t) => approx_truncated_with_t(&r, mu, t, CoefficientStrategy::Auto, &RyserOptions::default())?,
                    None => approx_truncated(&r, mu, &cfg)?,
                },
                AlgorithmArg::Simple => {
                    approx_simple(&r, mu, xi.context("the simple estimator needs --xi or --dist")?)?
                }
                AlgorithmArg::Ptas => {
                    approx_ptas(&r, mu, xi.context("the PTAS needs --xi or --dist")?, &cfg)?
                }
            };
            if !est.z_admissible {
                log::warn!("|1/mu| is outside the range covered by the average-case guarantee");
            }
            print_json(&json!({
                "algorithm": est.algorithm.as_str(),
                "t_used": est.t_used,
                "z": [est.z.re, est.z.im],
                "z_admissible": est.z_admissible,
                "estimate": log_json(est.value),
            }))?;
        }
        Command::Sample { dist, mu, n, seed, out } => {
            let d = builtin_distribution(dist, mu)?;
            let s = sample_matrix(&d, n, seed)?;
            let text = serde_json::to_string(&s.matrix)?;
            match out {
                Some(path) => fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
        }
        Command::Experiment {
            config,
            out,
            format,
            threads,
            progress,
        } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let report = |done: usize, total: usize| {
                if done == total || done.is_multiple_of(100) {
                    eprintln!("{done}/{total} trials");
                }
            };
            let opts = RunOptions {
                threads,
                progress: progress.then_some(&report as &(dyn Fn(usize, usize) + Sync)),
            };
            let records = run_experiment_with(&cfg, &opts)?;
            let format = match format {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            };
            write_results(&records, &out, format)?;
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            eprintln!("{} records written to {} ({failed} failed)", records.len(), out.display());
            let outcomes = evaluate_checks(&cfg.checks, &records);
            for o in &outcomes {
                eprintln!("[{}] {} = {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.value);
            }
            if outcomes.iter().any(|o| !o.passed) {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Diagnose {
            table,
            n,
            dist,
            mu,
            eps,
            trials,
            seed,
            k,
        } => {
            let d = builtin_distribution(dist, mu)?;
            let cfg = default_config(eps)?;
            match table {
                Table::AkMoments => print_json(&diagnostic_ak_moments(n, k.unwrap_or(3.min(n)), trials, &d, seed)?)?,
                Table::Tail => print_json(&diagnostic_tail(n, mu, &cfg, k, trials, &d, seed)?)?,
                Table::VkGap => print_json(&diagnostic_vk_gap(
                    n,
                    mu,
                    k.unwrap_or_else(|| cfg.truncation(n)),
                    &cfg,
                    trials,
                    &d,
                    seed,
                )?)?,
                Table::EstimatorMagnitude => {
                    print_json(&diagnostic_estimator_magnitude(n, mu, cfg.gamma, trials, &d, seed)?)?
                }
                Table::DConcentration => {
                    print_json(&diagnostic_d_concentration(n, DK_DELTA, k.unwrap_or(DK_MAX), trials, &d, seed)?)?
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
