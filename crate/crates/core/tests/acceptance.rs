//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any failed. Tolerances are pinned below.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use permanent_core::approx::{approx_ptas_with, approx_simple, approx_truncated_with_t, ptas_uses_simple};
use permanent_core::distributions::EntryStream;
use permanent_core::exact::RyserOptions;
use permanent_core::experiment::{
    diagnostic_ak_moments, diagnostic_d_concentration, trial_seed, DK_DELTA,
};
use permanent_core::hermite::hermite_bound;
use permanent_core::stats::{bootstrap_se, median};
use permanent_core::{
    builtin_distribution, coefficient_submatrix, coefficients_interpolation, coefficients_submatrix,
    compute_v_d, default_config, elementary_symmetric_direct, elementary_symmetric_newton, hermite_h,
    hermite_h_explicit, ln_factorial, permanent_naive, permanent_of_j_plus_za, permanent_ryser,
    relative_error, sample_matrix, truncated_series, vprime_sequence, Algorithm, CoefficientStrategy,
    ColumnStats, Complex64, ComplexMatrix, DistributionKind, Error, LogComplex, SurrogateInputs,
};

const ORACLE_TOL: f64 = 1e-10;
const RYSER_N24_LIMIT: Duration = Duration::from_secs(60);
const EXPANSION_TOL: f64 = 1e-8;
const CROSS_METHOD_TOL: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-10;
const V_RECURSION_TOL: f64 = 1e-8;
const V1_A1_TOL: f64 = 1e-12;
const HERMITE_TOL: f64 = 1e-9;
const VPRIME_TOL: f64 = 1e-8;
const GENERATING_TOL: f64 = 1e-8;
const MOMENT_SE: f64 = 4.0;
const GAP_FACTOR: f64 = 1.5;
const DK_FRACTION_MIN: f64 = 0.9;
const END_TO_END_TOL: f64 = 1e-7;

type Outcome = Result<String, String>;
type Estimator = dyn Fn(&ComplexMatrix) -> LogComplex + Sync;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn gaussian(kind: DistributionKind, mu: Complex64, n: usize, seed: u64) -> ComplexMatrix {
    let d = builtin_distribution(kind, mu).unwrap();
    sample_matrix(&d, n, seed).unwrap().matrix
}

fn complex_gaussian(n: usize, seed: u64) -> ComplexMatrix {
    gaussian(DistributionKind::ComplexGaussian, c(0.0, 0.0), n, seed)
}

fn check(pass: bool, detail: String) -> Outcome {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Every `ColumnStats` produced by the suite goes through here.
fn residual_ok(stats: &ColumnStats, worst: &mut f64) {
    *worst = worst.max(stats.v_recursion_residual());
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..1000 {
        let m = complex_gaussian(6, 10_000 + seed);
        let e = relative_error(permanent_ryser(&m).unwrap(), permanent_naive(&m).unwrap()).unwrap();
        worst = worst.max(e);
    }
    let m = complex_gaussian(24, 1);
    let start = Instant::now();
    permanent_ryser(&m).unwrap();
    let elapsed = start.elapsed();
    check(
        worst <= ORACLE_TOL && elapsed <= RYSER_N24_LIMIT,
        format!("max rel err {worst:.2e} (tol {ORACLE_TOL:e}); n=24 Ryser {:.2}s", elapsed.as_secs_f64()),
    )
}

fn random_z(rng: &mut EntryStream, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn expansion_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = EntryStream::new(2, 0);
    for i in 0..100u64 {
        let n = 1 + (i as usize % 8);
        let a = complex_gaussian(n, 20_000 + i);
        let series = coefficients_interpolation(&a).unwrap();
        for _ in 0..5 {
            let z = random_z(&mut rng, 2.0);
            let sum = truncated_series(&series, z, n).unwrap();
            let full = permanent_of_j_plus_za(&a, z).unwrap().to_complex() * (-ln_factorial(n)).exp();
            worst = worst.max(rel(sum, full));
        }
    }
    check(worst <= EXPANSION_TOL, format!("max rel err {worst:.2e} (tol {EXPANSION_TOL:e})"))
}

fn coefficient_cross_method() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let n = 1 + (i as usize % 8);
        let k_max = n.min(4);
        let a = complex_gaussian(n, 30_000 + i);
        let sub = coefficients_submatrix(&a, k_max, 1e9).unwrap();
        let int = coefficients_interpolation(&a).unwrap();
        for k in 0..=k_max {
            worst = worst.max(rel(int.coeffs[k], sub.coeffs[k]));
        }
    }
    check(worst <= CROSS_METHOD_TOL, format!("max rel err {worst:.2e} (tol {CROSS_METHOD_TOL:e})"))
}

fn newton_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let mut rng = EntryStream::new(4, i);
        let len = 1 + rng.random_range(0..12);
        let xs: Vec<Complex64> = (0..len)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let direct = elementary_symmetric_direct(&xs, len);
        let newton = elementary_symmetric_newton(&xs, len);
        for k in 0..=len {
            worst = worst.max(rel(newton[k], direct[k]));
        }
    }
    check(worst <= NEWTON_TOL, format!("max rel err {worst:.2e} (tol {NEWTON_TOL:e})"))
}

fn v_recursion(extra_worst: f64, extra_count: usize) -> Outcome {
    let mut worst = extra_worst;
    let mut v1_worst: f64 = 0.0;
    for i in 0..100u64 {
        let n = 2 + (i as usize % 15);
        let a = complex_gaussian(n, 40_000 + i);
        let stats = compute_v_d(&a, n).unwrap();
        residual_ok(&stats, &mut worst);
        v1_worst = v1_worst.max(rel(stats.v[1], coefficient_submatrix(&a, 1).unwrap()));
    }
    check(
        worst <= V_RECURSION_TOL && v1_worst <= V1_A1_TOL,
        format!(
            "max recursion residual {worst:.2e} over {} stats (tol {V_RECURSION_TOL:e}); V_1 vs a_1 {v1_worst:.2e} (tol {V1_A1_TOL:e})",
            extra_count + 100
        ),
    )
}

fn hermite() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bound_violations = 0;
    let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
    for &x in &grid {
        let x = c(x, 0.0);
        for k in 0..=50 {
            let h = hermite_h(k, x);
            if k <= 30 {
                worst = worst.max(rel(h, hermite_h_explicit(k, x).unwrap()));
            }
            if h.norm() > hermite_bound(k, x.norm()) {
                bound_violations += 1;
            }
        }
    }
    // Off the real axis the alternating sum does not cancel to a root.
    for re in (-4..=4).map(|i| i as f64 * 2.5) {
        for im in (-4..=4).map(|i| i as f64 * 2.5).filter(|&im| im != 0.0) {
            let x = c(re, im);
            if x.norm() > 10.0 {
                continue;
            }
            for k in 0..=30 {
                worst = worst.max(rel(hermite_h(k, x), hermite_h_explicit(k, x).unwrap()));
            }
        }
    }
    check(
        worst <= HERMITE_TOL && bound_violations == 0,
        format!("max rel err {worst:.2e} (tol {HERMITE_TOL:e}); bound violations {bound_violations}"),
    )
}

fn vprime() -> Outcome {
    let xis = [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.5)];
    let axis = [-1.4, -0.7, 0.0, 0.7, 1.4];
    let zs = [c(0.5, 0.0), c(-1.0, 0.0), c(1.0, 1.0)];
    let mut worst: f64 = 0.0;
    let mut gf_worst: f64 = 0.0;
    for &xi in &xis {
        for &re in &axis {
            for &im in &axis {
                let v1 = c(re, im);
                for &z in &zs {
                    let inp = SurrogateInputs::new(v1, xi, z).unwrap();
                    let seq = vprime_sequence(&inp, 60).unwrap();
                    // Closed form through the explicit (double-double) Hermite sum.
                    for (k, &vk) in seq.iter().enumerate().take(41) {
                        let closed = if xi == c(0.0, 0.0) {
                            v1.powu(k as u32) * (-ln_factorial(k)).exp()
                        } else {
                            let root = xi.sqrt();
                            root.powu(k as u32) * hermite_h_explicit(k, v1 / root).unwrap()
                        };
                        if closed.norm() > 0.0 {
                            worst = worst.max(rel(vk, closed));
                        } else {
                            worst = worst.max(vk.norm());
                        }
                    }
                    let sum: Complex64 = seq.iter().rev().fold(c(0.0, 0.0), |acc, &v| acc * z + v);
                    let target = (v1 * z - xi * z * z / 2.0).exp();
                    gf_worst = gf_worst.max((sum - target).norm());
                }
            }
        }
    }
    check(
        worst <= VPRIME_TOL && gf_worst <= GENERATING_TOL,
        format!("recursion vs closed form {worst:.2e} (tol {VPRIME_TOL:e}); generating function {gf_worst:.2e} (tol {GENERATING_TOL:e})"),
    )
}

fn moments() -> Outcome {
    let d = builtin_distribution(DistributionKind::RealGaussian, c(0.0, 0.0)).unwrap();
    let table = diagnostic_ak_moments(10, 3, 2000, &d, 8).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for row in &table.rows[1..] {
        let inv_fact = (-ln_factorial(row.k)).exp();
        let second = row.second_moment.within(inv_fact, MOMENT_SE);
        let mean = row.mean.within(c(0.0, 0.0), MOMENT_SE);
        ok &= second && mean && row.predicted_second_moment == inv_fact;
        parts.push(format!(
            "k={}: E|a|^2 {:.4}+-{:.4} vs {:.4}, E a ({:.3},{:.3})",
            row.k,
            row.second_moment.mean,
            row.second_moment.se,
            inv_fact,
            row.mean.re.mean,
            row.mean.im.mean
        ));
    }
    check(ok, parts.join("; "))
}

fn vk_gap() -> Outcome {
    let d = builtin_distribution(DistributionKind::RealGaussian, c(0.0, 0.0)).unwrap();
    let n = 10;
    let table = diagnostic_ak_moments(n, 3, 2000, &d, 9).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [2usize, 3] {
        let row = &table.rows[k];
        let bound = (k * (k - 1)) as f64 / (2.0 * n as f64) * (-ln_factorial(k)).exp();
        ok &= row.vk_gap.mean <= GAP_FACTOR * bound;
        parts.push(format!("k={k}: E|V-a|^2 {:.4} vs {GAP_FACTOR} x {:.4}", row.vk_gap.mean, bound));
    }
    check(ok, parts.join("; "))
}

fn concentration() -> Outcome {
    let d = builtin_distribution(DistributionKind::RealGaussian, c(0.0, 0.0)).unwrap();
    let small = diagnostic_d_concentration(100, DK_DELTA, 10, 500, &d, 10).unwrap();
    let large = diagnostic_d_concentration(400, DK_DELTA, 10, 500, &d, 11).unwrap();
    check(
        large.median_d2_gap < small.median_d2_gap && large.fraction_dk_within >= DK_FRACTION_MIN,
        format!(
            "median |D2-xi| {:.4} (n=100) -> {:.4} (n=400); |D_k| fraction at n=400 {:.3} (min {DK_FRACTION_MIN})",
            small.median_d2_gap, large.median_d2_gap, large.fraction_dk_within
        ),
    )
}

fn end_to_end_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for mu in [0.3, 1.0, 2.0] {
        for i in 0..50u64 {
            let n = 1 + (i as usize % 8);
            let r = gaussian(DistributionKind::ComplexGaussian, c(mu, 0.0), n, 50_000 + i);
            for strategy in [CoefficientStrategy::Submatrix, CoefficientStrategy::Interpolation] {
                let est = approx_truncated_with_t(&r, c(mu, 0.0), n, strategy, &RyserOptions::default()).unwrap();
                worst = worst.max(relative_error(est.value, permanent_ryser(&r).unwrap()).unwrap());
                count += 1;
            }
        }
    }
    check(worst <= END_TO_END_TOL, format!("max rel err {worst:.2e} over {count} runs (tol {END_TO_END_TOL:e})"))
}

/// Relative errors of a family of estimators on common seeds.
fn paired_errors(n: usize, seeds: u64, base: u64, estimators: &[&Estimator]) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    (0..seeds)
        .into_par_iter()
        .map(|s| {
            let r = gaussian(DistributionKind::RealGaussian, c(1.0, 0.0), n, trial_seed(base, n as u64, s));
            let truth = permanent_ryser(&r).unwrap();
            estimators
                .iter()
                .map(|f| relative_error(f(&r), truth).unwrap())
                .collect()
        })
        .collect()
}

fn quality_trend() -> Outcome {
    let mu = c(1.0, 0.0);
    let ts = [1usize, 2, 4, 6];
    let truncs: Vec<Box<Estimator>> = ts
        .iter()
        .map(|&t| {
            Box::new(move |r: &ComplexMatrix| {
                approx_truncated_with_t(r, mu, t, CoefficientStrategy::Auto, &RyserOptions::default())
                    .unwrap()
                    .value
            }) as Box<Estimator>
        })
        .collect();
    let refs: Vec<&Estimator> = truncs.iter().map(|b| b.as_ref()).collect();
    let rows = paired_errors(14, 200, 12, &refs);
    let col = |rows: &[&Vec<f64>], j: usize| median(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
    let all: Vec<&Vec<f64>> = rows.iter().collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (j, t) in ts.iter().enumerate() {
        parts.push(format!("t={t}: {:.4}", col(&all, j)));
    }
    for j in 0..ts.len() - 1 {
        let diff = col(&all, j + 1) - col(&all, j);
        let se = bootstrap_se(&rows, 500, 100 + j as u64, |s| col(s, j + 1) - col(s, j));
        ok &= diff <= se;
        parts.push(format!("d{}->{} {diff:+.4} (se {se:.4})", ts[j], ts[j + 1]));
    }
    let xi = c(1.0, 0.0);
    let simple = move |r: &ComplexMatrix| approx_simple(r, mu, xi).unwrap().value;
    let s14 = median(&paired_errors(14, 200, 13, &[&simple]).iter().map(|r| r[0]).collect::<Vec<_>>());
    let s20 = median(&paired_errors(20, 200, 13, &[&simple]).iter().map(|r| r[0]).collect::<Vec<_>>());
    ok &= s20 <= s14;
    parts.push(format!("simple median n=14 {s14:.4}, n=20 {s20:.4}"));
    check(ok, parts.join("; "))
}

fn ptas_dispatch() -> Outcome {
    let mut cfg = default_config(0.95).unwrap();
    cfg.rho_ptas = 0.02;
    let xi = c(1.0, 0.0);
    let mu = c(1.0, 0.0);
    let ryser = RyserOptions::default();
    // n^(-0.02) = 0.912 at n = 100: eps = 0.95 routes to the simple estimator.
    let r100 = gaussian(DistributionKind::RealGaussian, mu, 100, 1);
    let simple_route = ptas_uses_simple(100, &cfg)
        && approx_ptas_with(&r100, mu, xi, &cfg, &ryser).unwrap().algorithm == Algorithm::Simple;
    let simple_value = approx_ptas_with(&r100, mu, xi, &cfg, &ryser).unwrap().value
        == approx_simple(&r100, mu, xi).unwrap().value;
    let cfg = default_config(0.5).unwrap();
    let r12 = gaussian(DistributionKind::RealGaussian, mu, 12, 2);
    let est = approx_ptas_with(&r12, mu, xi, &cfg, &ryser).unwrap();
    let exact_route = !ptas_uses_simple(12, &cfg) && est.algorithm == Algorithm::ExactFallback;
    let bit_identical = est.value == permanent_ryser(&r12).unwrap();
    let r40 = gaussian(DistributionKind::RealGaussian, mu, 40, 3);
    let oversize = matches!(
        approx_ptas_with(&r40, mu, xi, &cfg, &ryser),
        Err(Error::ExactFallbackTooLarge { n: 40, limit: 30 })
    );
    check(
        simple_route && simple_value && exact_route && bit_identical && oversize,
        format!(
            "simple route {simple_route}, simple value {simple_value}, exact route {exact_route}, bit-identical {bit_identical}, oversize error {oversize}"
        ),
    )
}

/// Recursion residuals on the statistics behind the estimator path.
fn collect_stats_residuals() -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [14usize, 20, 100, 400] {
        for s in 0..20u64 {
            let r = gaussian(DistributionKind::RealGaussian, c(1.0, 0.0), n, trial_seed(14, n as u64, s));
            let a = r.map(|x| x - 1.0);
            let stats = compute_v_d(&a, n.min(10)).unwrap();
            residual_ok(&stats, &mut worst);
            count += 1;
        }
    }
    (worst, count)
}

fn main() -> ExitCode {
    let (extra_worst, extra_count) = collect_stats_residuals();
    let criteria: Vec<Criterion> = vec![
        ("exact oracle equivalence", Box::new(oracle_equivalence)),
        ("expansion identity", Box::new(expansion_identity)),
        ("coefficient cross-method", Box::new(coefficient_cross_method)),
        ("newton identities", Box::new(newton_identities)),
        ("v recursion and v1 = a1", Box::new(move || v_recursion(extra_worst, extra_count))),
        ("hermite recursion and bound", Box::new(hermite)),
        ("surrogate sequence and generating function", Box::new(vprime)),
        ("coefficient moments", Box::new(moments)),
        ("v_k versus a_k gap", Box::new(vk_gap)),
        ("power sum concentration", Box::new(concentration)),
        ("full truncation is exact", Box::new(end_to_end_exactness)),
        ("estimator quality trend", Box::new(quality_trend)),
        ("ptas dispatch", Box::new(ptas_dispatch)),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "[{tag}] {:>2} {name}: {detail} ({:.1}s)",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        total.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
