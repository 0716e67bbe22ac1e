//! Column sums of the centered matrix and the symmetric-function estimators
//! `V_k = n^(-k/2) e_k(C)` and `D_k = n^(-k/2) S_k(C)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalars::ComplexMatrix;

/// Tolerance of the Newton-identity self-check run by [`compute_v_d`].
pub const V_RECURSION_TOL: f64 = 1e-8;

/// `C_j = n^(-1/2) sum_i A[i][j]`.
pub fn column_sums(a: &ComplexMatrix) -> Vec<Complex64> {
    let n = a.n();
    let scale = 1.0 / (n as f64).sqrt();
    let mut sums = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for (s, &x) in sums.iter_mut().zip(a.row(i)) {
            *s += x;
        }
    }
    sums.iter_mut().for_each(|s| *s *= scale);
    sums
}

/// Power sums `S_1 ..= S_m` (complex powers, not moduli). Entry `k - 1`
/// holds `S_k`.
pub fn power_sums(xs: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut sums = vec![Complex64::new(0.0, 0.0); m];
    for &x in xs {
        let mut p = Complex64::new(1.0, 0.0);
        for s in sums.iter_mut() {
            p *= x;
            *s += p;
        }
    }
    sums
}

/// `e_0 ..= e_m` as the coefficients of `prod_i (1 + x_i y)` truncated at
/// `y^m`. Indices beyond `xs.len()` are zero.
pub fn elementary_symmetric_direct(xs: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); m + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (count, &x) in xs.iter().enumerate() {
        let top = (count + 1).min(m);
        for k in (1..=top).rev() {
            let prev = e[k - 1];
            e[k] += x * prev;
        }
    }
    e
}

/// `e_0 ..= e_m` from power sums by Newton's identities:
/// `e_m = (1/m) sum_{k=0}^{m-1} (-1)^k e_{m-k-1} S_{k+1}`.
pub fn elementary_symmetric_newton(xs: &[Complex64], m: usize) -> Vec<Complex64> {
    let s = power_sums(xs, m);
    let mut e = Vec::with_capacity(m + 1);
    e.push(Complex64::new(1.0, 0.0));
    for k in 1..=m {
        let sum: Complex64 = (0..k)
            .map(|i| {
                let term = e[k - i - 1] * s[i];
                if i % 2 == 0 {
                    term
                } else {
                    -term
                }
            })
            .sum();
        e.push(sum / k as f64);
    }
    e
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub n: usize,
    /// Column sums `C_1 ..= C_n`.
    pub c: Vec<Complex64>,
    /// `V_0 ..= V_m`.
    pub v: Vec<Complex64>,
    /// `D_0 ..= D_m`, with `D_0 = n`.
    pub d: Vec<Complex64>,
}

impl ColumnStats {
    pub fn m(&self) -> usize {
        self.v.len() - 1
    }

    /// Largest residual of
    /// `k V_k = V_{k-1} V_1 - V_{k-2} D_2 + sum_{i=2}^{k-1} (-1)^i V_{k-1-i} D_{i+1}`
    /// over `2 <= k <= m`, each relative to the sum of the magnitudes of its
    /// terms.
    pub fn v_recursion_residual(&self) -> f64 {
        let (v, d) = (&self.v, &self.d);
        (2..=self.m())
            .map(|k| {
                let mut terms = vec![v[k - 1] * v[1], -(v[k - 2] * d[2])];
                for i in 2..k {
                    let t = v[k - 1 - i] * d[i + 1];
                    terms.push(if i % 2 == 0 { t } else { -t });
                }
                let rhs: Complex64 = terms.iter().sum();
                let lhs = v[k] * k as f64;
                let scale = terms.iter().map(|t| t.norm()).sum::<f64>().max(lhs.norm());
                if scale == 0.0 {
                    0.0
                } else {
                    (lhs - rhs).norm() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `V_k` and `D_k` for `k = 0 ..= m`. The elementary symmetric polynomials
/// come from the product recurrence; Newton's identities are then checked on
/// the result and a violation is reported as [`Error::SelfCheck`].
pub fn compute_v_d(a: &ComplexMatrix, m: usize) -> Result<ColumnStats> {
    let n = a.n();
    if m > n {
        return Err(Error::InvalidParameter(format!("m = {m} exceeds n = {n}")));
    }
    let c = column_sums(a);
    let e = elementary_symmetric_direct(&c, m);
    let s = power_sums(&c, m);
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut v = Vec::with_capacity(m + 1);
    let mut d = Vec::with_capacity(m + 1);
    let mut scale = 1.0;
    for k in 0..=m {
        v.push(e[k] * scale);
        d.push(if k == 0 {
            Complex64::new(n as f64, 0.0)
        } else {
            s[k - 1] * scale
        });
        scale *= inv_sqrt_n;
    }
    let stats = ColumnStats { n, c, v, d };
    let residual = stats.v_recursion_residual();
    if residual > V_RECURSION_TOL {
        return Err(Error::SelfCheck(format!(
            "V_k Newton recursion residual {residual:.3e} exceeds {V_RECURSION_TOL:e}"
        )));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::coefficient_submatrix;
    use crate::distributions::{builtin_distribution, sample_matrix, DistributionKind};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reals(xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| c(x, 0.0)).collect()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn column_sum_examples() {
        let n = 5;
        assert!(column_sums(&ComplexMatrix::ones(n))
            .iter()
            .all(|s| close(*s, c(5f64.sqrt(), 0.0), 1e-15)));
        assert!(column_sums(&ComplexMatrix::zeros(3)).iter().all(|s| s.norm() == 0.0));
        let a = ComplexMatrix::from_real_rows(&[&[1.0, -1.0], &[2.0, 0.0]]).unwrap();
        let cs = column_sums(&a);
        assert!(close(cs[0], c(3.0 / 2f64.sqrt(), 0.0), 1e-15));
        assert!(close(cs[1], c(-1.0 / 2f64.sqrt(), 0.0), 1e-15));
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(power_sums(&reals(&[1.0, 2.0, 3.0]), 2)[1], c(14.0, 0.0));
        assert_eq!(power_sums(&[c(0.0, 1.0), c(0.0, -1.0)], 2)[1], c(-2.0, 0.0));
        assert!(power_sums(&reals(&[0.0; 4]), 5).iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn elementary_examples() {
        let e = elementary_symmetric_direct(&reals(&[1.0, 2.0, 3.0]), 3);
        assert_eq!(e, reals(&[1.0, 6.0, 11.0, 6.0]));
        assert_eq!(elementary_symmetric_direct(&[], 0), reals(&[1.0]));
        let e = elementary_symmetric_direct(&reals(&[4.0, 0.0, -2.5]), 3);
        assert_eq!(e[3], c(0.0, 0.0));
        let e = elementary_symmetric_newton(&reals(&[1.0, 2.0, 3.0]), 3);
        assert!(close(e[2], c(11.0, 0.0), 1e-15));
        assert!(close(e[3], c(6.0, 0.0), 1e-15));
        let xs = [c(0.3, -1.0), c(2.0, 0.5)];
        assert_eq!(elementary_symmetric_newton(&xs, 1)[1], xs[0] + xs[1]);
        assert_eq!(elementary_symmetric_direct(&xs, 4)[3], c(0.0, 0.0));
    }

    #[test]
    fn v_d_example() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, -1.0], &[2.0, 0.0]]).unwrap();
        let s = compute_v_d(&a, 2).unwrap();
        assert_eq!(s.v[0], c(1.0, 0.0));
        assert!(close(s.v[1], c(1.0, 0.0), 1e-15));
        assert!(close(s.d[1], c(1.0, 0.0), 1e-15));
        assert!(close(s.v[2], c(-0.75, 0.0), 1e-15));
        assert!(close(s.d[2], c(2.5, 0.0), 1e-15));
        assert!(compute_v_d(&a, 3).is_err());
    }

    #[test]
    fn v1_is_a1() {
        let d = builtin_distribution(DistributionKind::ComplexGaussian, c(0.0, 0.0)).unwrap();
        for seed in 0..20 {
            let a = sample_matrix(&d, 9, seed).unwrap().matrix;
            let s = compute_v_d(&a, 1).unwrap();
            let a1 = coefficient_submatrix(&a, 1).unwrap();
            assert!(close(s.v[1], a1, 1e-12));
        }
    }

    #[test]
    fn recursion_residual_detects_corruption() {
        let d = builtin_distribution(DistributionKind::RealGaussian, c(0.0, 0.0)).unwrap();
        let a = sample_matrix(&d, 12, 4).unwrap().matrix;
        let mut s = compute_v_d(&a, 8).unwrap();
        assert!(s.v_recursion_residual() < 1e-12);
        s.v[5] *= 1.001;
        assert!(s.v_recursion_residual() > 1e-6);
    }

    fn complex_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-2f64..2.0, -2f64..2.0).prop_map(|(r, i)| c(r, i)), len)
    }

    proptest! {
        #[test]
        fn newton_matches_direct(xs in complex_vec(1..=12)) {
            let m = xs.len();
            let direct = elementary_symmetric_direct(&xs, m);
            let newton = elementary_symmetric_newton(&xs, m);
            let scale = xs.iter().map(|x| x.norm()).fold(1.0, f64::max);
            for k in 0..=m {
                // Absolute scale bound: |e_k| <= C(m, k) max|x|^k.
                let tol = 1e-10 * scale.powi(k as i32) * 2f64.powi(m as i32);
                prop_assert!((direct[k] - newton[k]).norm() <= tol, "k = {}", k);
            }
        }
    }
}
