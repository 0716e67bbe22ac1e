//! Coefficients `a_k` of the expansion `Per(J + zA) / n! = sum_k a_k z^k`.
//!
//! `a_k` is the sum of the permanents of all `k x k` submatrices of `A`,
//! divided by the falling factorial `n (n-1) ... (n-k+1)`. Two independent
//! routes compute it: direct submatrix enumeration, and interpolation of the
//! degree-`n` polynomial `z -> Per(J + zA) / n!` at the `(n+1)`-th roots of
//! unity.

use std::f64::consts::TAU;

use itertools::Itertools;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ryser_raw, RyserOptions};
use crate::scalars::{ln_factorial, ComplexMatrix};

/// Default work budget (in complex operations) for [`coefficient_submatrix`].
pub const COEFFICIENT_BUDGET: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientMethod {
    Submatrix,
    Interpolation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSeries {
    pub n: usize,
    /// `a_0 ..= a_m`; `a_0` is exactly 1.
    pub coeffs: Vec<Complex64>,
    pub method: CoefficientMethod,
}

impl CoefficientSeries {
    /// Highest available index `m`.
    pub fn max_k(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// `ln(n (n-1) ... (n-k+1))`.
pub fn falling_factorial(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "falling factorial needs k <= n, got k = {k}, n = {n}"
        )));
    }
    Ok(((n - k + 1)..=n).map(|i| (i as f64).ln()).sum())
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Estimated work of the submatrix route for one `a_k`: `C(n,k)^2 2^k k`.
pub fn submatrix_work(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (2.0 * ln_binomial(n, k) + k as f64 * 2f64.ln() + (k as f64).ln()).exp()
}

/// Estimated work of the interpolation route: `(n + 1)` Ryser calls.
pub fn interpolation_work(n: usize) -> f64 {
    (n + 1) as f64 * (n as f64 * 2f64.ln()).exp() * n as f64
}

/// `a_k` by enumerating every `k x k` submatrix.
pub fn coefficient_submatrix(a: &ComplexMatrix, k: usize) -> Result<Complex64> {
    coefficient_submatrix_with_budget(a, k, COEFFICIENT_BUDGET)
}

pub fn coefficient_submatrix_with_budget(
    a: &ComplexMatrix,
    k: usize,
    budget: f64,
) -> Result<Complex64> {
    let n = a.n();
    let ln_norm = falling_factorial(n, k)?;
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let work = submatrix_work(n, k);
    if work > budget {
        return Err(Error::Budget { k, work, budget });
    }
    let row_sets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let partials: Vec<Complex64> = row_sets
        .par_iter()
        .map(|rows| {
            // k x n strip of the selected rows, then each column choice.
            let strip: Vec<Complex64> = rows.iter().flat_map(|&i| a.row(i).iter().copied()).collect();
            let mut block = vec![Complex64::new(0.0, 0.0); k * k];
            let mut sum = Complex64::new(0.0, 0.0);
            for cols in (0..n).combinations(k) {
                for r in 0..k {
                    for (c, &j) in cols.iter().enumerate() {
                        block[r * k + c] = strip[r * n + j];
                    }
                }
                sum += ryser_raw(&block, k);
            }
            sum
        })
        .collect();
    let total: Complex64 = partials.into_iter().sum();
    Ok(total * (-ln_norm).exp())
}

/// `a_0 ..= a_k_max` by submatrix enumeration.
pub fn coefficients_submatrix(
    a: &ComplexMatrix,
    k_max: usize,
    budget: f64,
) -> Result<CoefficientSeries> {
    if k_max > a.n() {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} exceeds n = {}",
            a.n()
        )));
    }
    let coeffs = (0..=k_max)
        .map(|k| coefficient_submatrix_with_budget(a, k, budget))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientSeries {
        n: a.n(),
        coeffs,
        method: CoefficientMethod::Submatrix,
    })
}

/// The full series `a_0 ..= a_n` by evaluating `q(w) = Per(J + wA) / n!` at
/// `w_j = exp(2 pi i j / (n+1))` and inverting the DFT:
/// `a_k = (1 / (n+1)) sum_j q(w_j) w_j^(-k)`.
pub fn coefficients_interpolation(a: &ComplexMatrix) -> Result<CoefficientSeries> {
    coefficients_interpolation_with(a, &RyserOptions::default())
}

pub fn coefficients_interpolation_with(
    a: &ComplexMatrix,
    opts: &RyserOptions,
) -> Result<CoefficientSeries> {
    let n = a.n();
    if n > opts.max_n {
        return Err(Error::Capacity {
            method: "coefficients_interpolation",
            n,
            limit: opts.max_n,
        });
    }
    let nodes = n + 1;
    let roots: Vec<Complex64> = (0..nodes)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / nodes as f64))
        .collect();
    let inv_fact = (-ln_factorial(n)).exp();
    let values: Vec<Complex64> = roots
        .par_iter()
        .map(|&w| ryser_raw(a.j_plus_z(w).as_slice(), n) * inv_fact)
        .collect();
    let scale = 1.0 / nodes as f64;
    let mut coeffs: Vec<Complex64> = (0..nodes)
        .map(|k| {
            let sum: Complex64 = values
                .iter()
                .enumerate()
                .map(|(j, &q)| q * roots[(nodes - (j * k) % nodes) % nodes])
                .sum();
            sum * scale
        })
        .collect();
    coeffs[0] = Complex64::new(1.0, 0.0);
    Ok(CoefficientSeries {
        n,
        coeffs,
        method: CoefficientMethod::Interpolation,
    })
}

/// `sum_{k=0}^t a_k z^k` by Horner's rule.
pub fn truncated_series(series: &CoefficientSeries, z: Complex64, t: usize) -> Result<Complex64> {
    if t > series.max_k() {
        return Err(Error::InvalidParameter(format!(
            "truncation t = {t} exceeds the {} available coefficients",
            series.coeffs.len()
        )));
    }
    Ok(series.coeffs[..=t]
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a))
}
