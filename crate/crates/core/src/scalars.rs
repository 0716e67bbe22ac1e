//! Complex scalars in log-polar form and dense complex matrices.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual magnitude, relative to the larger operand, below which a sum is
/// treated as exact cancellation. Each operand's Cartesian form carries about
/// one ulp of phase error, so anything at this level is noise.
pub const CANCELLATION_THRESHOLD: f64 = 4.0 * f64::EPSILON;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    if p > PI {
        p - TAU
    } else {
        p
    }
}

/// `ln(n!)` by direct summation.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// A complex number stored as `exp(log_mag) * exp(i * phase)`.
///
/// Permanents of `n x n` matrices with O(1) entries are of order `n!`, which
/// leaves the `f64` range at `n` around 170; this representation does not.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    pub log_mag: f64,
    pub phase: f64,
    pub is_zero: bool,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        log_mag: 0.0,
        phase: 0.0,
        is_zero: true,
    };

    pub const ONE: LogComplex = LogComplex {
        log_mag: 0.0,
        phase: 0.0,
        is_zero: false,
    };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        LogComplex {
            log_mag,
            phase: wrap_phase(phase),
            is_zero: false,
        }
    }

    pub fn from_complex(w: Complex64) -> Self {
        if w.re == 0.0 && w.im == 0.0 {
            return Self::ZERO;
        }
        Self::new(w.norm().ln(), w.arg())
    }

    /// `exp(w)`, without ever forming it in Cartesian form.
    pub fn from_ln(w: Complex64) -> Self {
        Self::new(w.re, w.im)
    }

    /// Positive real `exp(x)`.
    pub fn from_ln_real(x: f64) -> Self {
        Self::new(x, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    /// Cartesian value; overflows to infinity when `log_mag > ~709`.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }

    /// The Cartesian value if its magnitude is representable.
    pub fn to_complex_checked(&self) -> Option<Complex64> {
        let w = self.to_complex();
        (w.re.is_finite() && w.im.is_finite()).then_some(w)
    }

    /// Principal logarithm, `None` for zero.
    pub fn ln(&self) -> Option<Complex64> {
        (!self.is_zero).then(|| Complex64::new(self.log_mag, self.phase))
    }

    pub fn abs_ln(&self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.log_mag
        }
    }

    pub fn recip(&self) -> Option<Self> {
        (!self.is_zero).then(|| Self::new(-self.log_mag, -self.phase))
    }

    pub fn powu(&self, exp: u32) -> Self {
        if exp == 0 {
            return Self::ONE;
        }
        if self.is_zero {
            return Self::ZERO;
        }
        let k = f64::from(exp);
        Self::new(self.log_mag * k, self.phase * k)
    }

    /// Multiplies by the positive real `exp(x)`.
    pub fn scale_ln(&self, x: f64) -> Self {
        if self.is_zero {
            return *self;
        }
        LogComplex {
            log_mag: self.log_mag + x,
            ..*self
        }
    }
}

impl Default for LogComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<Complex64> for LogComplex {
    fn from(w: Complex64) -> Self {
        Self::from_complex(w)
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero || rhs.is_zero {
            return LogComplex::ZERO;
        }
        LogComplex::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

impl Add for LogComplex {
    type Output = LogComplex;

    fn add(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero {
            return rhs;
        }
        if rhs.is_zero {
            return self;
        }
        let (big, small) = if self.log_mag >= rhs.log_mag {
            (self, rhs)
        } else {
            (rhs, self)
        };
        // Rotate so the larger operand is the real number 1.
        let ratio = Complex64::from_polar(
            (small.log_mag - big.log_mag).exp(),
            small.phase - big.phase,
        );
        let s = Complex64::new(1.0, 0.0) + ratio;
        let mag = s.norm();
        if mag < CANCELLATION_THRESHOLD {
            return LogComplex::ZERO;
        }
        LogComplex::new(big.log_mag + mag.ln(), big.phase + s.arg())
    }
}

impl Neg for LogComplex {
    type Output = LogComplex;

    fn neg(self) -> LogComplex {
        if self.is_zero {
            return self;
        }
        LogComplex::new(self.log_mag, self.phase + PI)
    }
}

impl fmt::Display for LogComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero {
            write!(f, "0")
        } else {
            write!(f, "exp({} + {}i)", self.log_mag, self.phase)
        }
    }
}

/// `|1 - estimate / truth|`, computed from the log-domain ratio.
///
/// Ratios too large to represent saturate at `f64::MAX`.
pub fn relative_error(estimate: LogComplex, truth: LogComplex) -> Result<f64> {
    if truth.is_zero {
        return Err(Error::ZeroReference);
    }
    if estimate.is_zero {
        return Ok(1.0);
    }
    let log_ratio = estimate.log_mag - truth.log_mag;
    if log_ratio > 700.0 {
        return Ok(log_ratio.exp().min(f64::MAX));
    }
    let ratio = Complex64::from_polar(log_ratio.exp(), estimate.phase - truth.phase);
    Ok((Complex64::new(1.0, 0.0) - ratio).norm())
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if data.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                pos / n,
                pos % n
            )));
        }
        Ok(ComplexMatrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        let data = (0..n * n).map(|idx| f(idx / n, idx % n)).collect();
        ComplexMatrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("rows must all have length n".into()));
        }
        Self::new(n, rows.concat())
    }

    /// Real matrix from rows, convenient in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(n: usize) -> Self {
        Self::filled(n, Complex64::new(0.0, 0.0))
    }

    /// The all-ones matrix `J`.
    pub fn ones(n: usize) -> Self {
        Self::filled(n, Complex64::new(1.0, 0.0))
    }

    pub fn filled(n: usize, value: Complex64) -> Self {
        Self::from_fn(n, |_, _| value)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn sum(&self) -> Complex64 {
        self.data.iter().sum()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|&w| f(w)).collect(),
        }
    }

    /// `J + z * self`.
    pub fn j_plus_z(&self, z: Complex64) -> Self {
        self.map(|a| Complex64::new(1.0, 0.0) + z * a)
    }

    /// Reorders rows and columns: entry `(i, j)` of the result is
    /// `self[(rows[i], cols[j])]`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(self.n, |i, j| self[(rows[i], cols[j])])
    }

    pub fn scale_row(&self, row: usize, s: Complex64) -> Self {
        let mut out = self.clone();
        out.data[row * self.n..(row + 1) * self.n]
            .iter_mut()
            .for_each(|w| *w *= s);
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// File form of a matrix: `{"n": .., "re": [..], "im": [..]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.re.len() != m.im.len() {
            return Err(Error::InvalidMatrix(format!(
                "re has {} entries but im has {}",
                m.re.len(),
                m.im.len()
            )));
        }
        let data = m
            .re
            .into_iter()
            .zip(m.im)
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        ComplexMatrix::new(m.n, data)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        MatrixJson {
            n: m.n,
            re: m.data.iter().map(|w| w.re).collect(),
            im: m.data.iter().map(|w| w.im).collect(),
        }
    }
}
