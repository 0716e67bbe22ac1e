//! Exact permanents: permutation enumeration and Ryser's formula.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalars::{ComplexMatrix, LogComplex};

/// Largest dimension accepted by [`permanent_naive`].
pub const NAIVE_MAX_N: usize = 10;

/// Default dimension limit for Ryser's formula: about `2^30 * 30` operations.
pub const RYSER_MAX_N: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RyserOptions {
    pub max_n: usize,
    /// Number of contiguous slices of the Gray-code sequence. The slicing is
    /// fixed by this number alone, so results do not depend on thread count.
    pub partitions: usize,
    /// Neumaier-compensated accumulation of the signed products.
    pub compensated: bool,
}

impl Default for RyserOptions {
    fn default() -> Self {
        RyserOptions {
            max_n: RYSER_MAX_N,
            partitions: 1,
            compensated: false,
        }
    }
}

impl RyserOptions {
    pub fn parallel(partitions: usize) -> Self {
        RyserOptions {
            partitions,
            ..Self::default()
        }
    }
}

/// `sum over permutations sigma of prod_i M[i][sigma(i)]`, by depth-first
/// enumeration of partial permutations.
pub fn permanent_naive(m: &ComplexMatrix) -> Result<LogComplex> {
    let n = m.n();
    if n > NAIVE_MAX_N {
        return Err(Error::Capacity {
            method: "permanent_naive",
            n,
            limit: NAIVE_MAX_N,
        });
    }
    fn walk(m: &ComplexMatrix, row: usize, used: u32, acc: Complex64) -> Complex64 {
        let n = m.n();
        if row == n {
            return acc;
        }
        (0..n)
            .filter(|&j| used & (1 << j) == 0)
            .map(|j| walk(m, row + 1, used | (1 << j), acc * m[(row, j)]))
            .sum()
    }
    Ok(LogComplex::from_complex(walk(m, 0, 0, Complex64::new(1.0, 0.0))))
}

/// Ryser's inclusion-exclusion formula with Gray-code subset order.
pub fn permanent_ryser(m: &ComplexMatrix) -> Result<LogComplex> {
    permanent_ryser_with(m, &RyserOptions::default())
}

pub fn permanent_ryser_with(m: &ComplexMatrix, opts: &RyserOptions) -> Result<LogComplex> {
    if m.n() > opts.max_n {
        return Err(Error::Capacity {
            method: "permanent_ryser",
            n: m.n(),
            limit: opts.max_n,
        });
    }
    Ok(LogComplex::from_complex(ryser_raw_with(m.as_slice(), m.n(), opts)))
}

/// `Per(J + zA)`.
pub fn permanent_of_j_plus_za(a: &ComplexMatrix, z: Complex64) -> Result<LogComplex> {
    permanent_of_j_plus_za_with(a, z, &RyserOptions::default())
}

pub fn permanent_of_j_plus_za_with(
    a: &ComplexMatrix,
    z: Complex64,
    opts: &RyserOptions,
) -> Result<LogComplex> {
    permanent_ryser_with(&a.j_plus_z(z), opts)
}

/// Unguarded Ryser on a row-major `n x n` slice, sequential.
pub(crate) fn ryser_raw(data: &[Complex64], n: usize) -> Complex64 {
    ryser_raw_with(data, n, &RyserOptions::default())
}

/// `Per(M) = sum_{S subset cols} (-1)^(n - |S|) prod_i sum_{j in S} M[i][j]`.
///
/// Subsets are visited in reflected Gray-code order, so consecutive subsets
/// differ in one column and the row sums update with `n` additions.
fn ryser_raw_with(data: &[Complex64], n: usize, opts: &RyserOptions) -> Complex64 {
    debug_assert_eq!(data.len(), n * n);
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    // Column-major copy: flipping column j touches one contiguous run.
    let cols: Vec<Complex64> = (0..n * n).map(|idx| data[(idx % n) * n + idx / n]).collect();
    let total: u64 = 1 << n;
    let parts = opts.partitions.clamp(1, (total - 1) as usize) as u64;
    let bounds: Vec<(u64, u64)> = (0..parts)
        .map(|p| (1 + (total - 1) * p / parts, 1 + (total - 1) * (p + 1) / parts))
        .collect();
    let run = |&(lo, hi): &(u64, u64)| gray_range(&cols, n, lo, hi, opts.compensated);
    let partials: Vec<Complex64> = if parts > 1 {
        bounds.par_iter().map(run).collect()
    } else {
        bounds.iter().map(run).collect()
    };
    partials.into_iter().sum()
}

/// Signed sum over Gray-code steps `k` in `[lo, hi)`; step `k` visits subset
/// `gray(k) = k ^ (k >> 1)`.
fn gray_range(cols: &[Complex64], n: usize, lo: u64, hi: u64, compensated: bool) -> Complex64 {
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let start = (lo - 1) ^ ((lo - 1) >> 1);
    for j in (0..n).filter(|&j| start & (1 << j) != 0) {
        for (s, &x) in row_sums.iter_mut().zip(&cols[j * n..(j + 1) * n]) {
            *s += x;
        }
    }
    let mut acc = Accumulator::new(compensated);
    for k in lo..hi {
        let j = k.trailing_zeros() as usize;
        let gray = k ^ (k >> 1);
        let col = &cols[j * n..(j + 1) * n];
        if gray & (1 << j) != 0 {
            row_sums.iter_mut().zip(col).for_each(|(s, &x)| *s += x);
        } else {
            row_sums.iter_mut().zip(col).for_each(|(s, &x)| *s -= x);
        }
        let prod: Complex64 = row_sums.iter().product();
        if (n as u32 - gray.count_ones()).is_multiple_of(2) {
            acc.add(prod);
        } else {
            acc.add(-prod);
        }
    }
    acc.value()
}

/// Plain or Neumaier-compensated complex sum.
struct Accumulator {
    sum: Complex64,
    comp: Complex64,
    compensated: bool,
}

impl Accumulator {
    fn new(compensated: bool) -> Self {
        Accumulator {
            sum: Complex64::new(0.0, 0.0),
            comp: Complex64::new(0.0, 0.0),
            compensated,
        }
    }

    #[inline]
    fn add(&mut self, x: Complex64) {
        if !self.compensated {
            self.sum += x;
            return;
        }
        let (re, cre) = neumaier(self.sum.re, x.re);
        let (im, cim) = neumaier(self.sum.im, x.im);
        self.sum = Complex64::new(re, im);
        self.comp += Complex64::new(cre, cim);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

#[inline]
fn neumaier(sum: f64, x: f64) -> (f64, f64) {
    let t = sum + x;
    let c = if sum.abs() >= x.abs() {
        (sum - t) + x
    } else {
        (x - t) + sum
    };
    (t, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{builtin_distribution, sample_matrix, DistributionKind};
    use crate::scalars::relative_error;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(n: usize, seed: u64) -> ComplexMatrix {
        let d = builtin_distribution(DistributionKind::ComplexGaussian, c(0.0, 0.0)).unwrap();
        sample_matrix(&d, n, seed).unwrap().matrix
    }

    #[test]
    fn naive_examples() {
        let five = ComplexMatrix::filled(1, c(5.0, 0.0));
        assert!((permanent_naive(&five).unwrap().to_complex() - 5.0).norm() < 1e-14);
        let id = permanent_naive(&ComplexMatrix::identity(3)).unwrap().to_complex();
        assert!((id - 1.0).norm() < 1e-15);
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert!((permanent_naive(&m).unwrap().to_complex() - 10.0).norm() < 1e-13);
        assert!(matches!(
            permanent_naive(&ComplexMatrix::ones(11)),
            Err(Error::Capacity { limit: 10, .. })
        ));
    }

    #[test]
    fn ryser_examples() {
        let j4 = permanent_ryser(&ComplexMatrix::ones(4)).unwrap().to_complex();
        assert!((j4 - 24.0).norm() < 1e-12);
        let id = permanent_ryser(&ComplexMatrix::identity(5)).unwrap().to_complex();
        assert!((id - 1.0).norm() < 1e-13);
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert!((permanent_ryser(&m).unwrap().to_complex() - 10.0).norm() < 1e-13);
        let opts = RyserOptions {
            max_n: 8,
            ..Default::default()
        };
        assert!(matches!(
            permanent_ryser_with(&ComplexMatrix::ones(9), &opts),
            Err(Error::Capacity { n: 9, limit: 8, .. })
        ));
        assert!(permanent_ryser(&ComplexMatrix::ones(31)).is_err());
    }

    #[test]
    fn ryser_matches_naive() {
        for seed in 0..50 {
            let m = random(1 + (seed as usize % 8), seed);
            let e = relative_error(permanent_ryser(&m).unwrap(), permanent_naive(&m).unwrap());
            assert!(e.unwrap() < 1e-10);
        }
    }

    #[test]
    fn partitioning_and_compensation_agree() {
        let m = random(14, 5);
        let base = permanent_ryser(&m).unwrap();
        for parts in [2, 3, 7, 64] {
            let p = permanent_ryser_with(&m, &RyserOptions::parallel(parts)).unwrap();
            let e = relative_error(p, base).unwrap();
            // Mean-zero entries cancel heavily; slices round differently.
            assert!(e < 1e-10, "parts {parts}: {e:e}");
        }
        let comp = RyserOptions {
            compensated: true,
            ..Default::default()
        };
        let p = permanent_ryser_with(&m, &comp).unwrap();
        assert!(relative_error(p, base).unwrap() < 1e-10);
        // Same slicing, any thread count: identical bits.
        let a = permanent_ryser_with(&m, &RyserOptions::parallel(16)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| permanent_ryser_with(&m, &RyserOptions::parallel(16)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn j_plus_za_examples() {
        let zero = ComplexMatrix::zeros(4);
        let p = permanent_of_j_plus_za(&zero, c(0.7, -2.0)).unwrap().to_complex();
        assert!((p - 24.0).norm() < 1e-12);
        let a = random(4, 1);
        let p = permanent_of_j_plus_za(&a, c(0.0, 0.0)).unwrap().to_complex();
        assert!((p - 24.0).norm() < 1e-12);
        // Per([[1+z, 1], [1, 1+z]]) = (1+z)^2 + 1 = 5 at z = 1.
        let p = permanent_of_j_plus_za(&ComplexMatrix::identity(2), c(1.0, 0.0)).unwrap();
        assert!((p.to_complex() - 5.0).norm() < 1e-14);
    }

    #[test]
    fn permutation_invariance_and_row_linearity() {
        let m = random(7, 77);
        let base = permanent_ryser(&m).unwrap();
        let rows = [3, 0, 6, 1, 5, 2, 4];
        let cols = [6, 5, 4, 3, 2, 1, 0];
        let p = permanent_ryser(&m.permuted(&rows, &cols)).unwrap();
        assert!(relative_error(p, base).unwrap() < 1e-10);
        let s = c(-1.5, 0.25);
        let scaled = permanent_ryser(&m.scale_row(2, s)).unwrap();
        let expected = base * LogComplex::from_complex(s);
        assert!(relative_error(scaled, expected).unwrap() < 1e-10);
    }
}
