//! Normalized probabilists' Hermite polynomials `h_k = He_k / k!`, the
//! surrogate sequence `V'_k`, and its generating function
//! `sum_k V'_k z^k = exp(V_1 z - xi z^2 / 2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalars::LogComplex;

/// Largest degree accepted by [`hermite_h_explicit`].
pub const EXPLICIT_MAX_K: usize = 60;

/// Tolerance of the recursion-versus-closed-form check in [`vprime_sequence`],
/// relative to `max(|V'_k|, envelope_k)`.
pub const VPRIME_CHECK_TOL: f64 = 1e-8;

/// `h_k(x)` by `h_k = (x h_{k-1} - h_{k-2}) / k`, `h_0 = 1`, `h_1 = x`.
pub fn hermite_h(k: usize, x: Complex64) -> Complex64 {
    let (mut prev, mut cur) = (Complex64::new(1.0, 0.0), x);
    if k == 0 {
        return prev;
    }
    for i in 2..=k {
        let next = (x * cur - prev) / i as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// `h_k(x) = sum_{j <= k/2} (-1)^j x^(k-2j) / (j! (k-2j)! 2^j)`, summed in
/// double-double arithmetic. The alternating sum cancels heavily for real
/// `x` inside `[-2 sqrt(k), 2 sqrt(k)]`; the extra precision keeps this
/// usable as an independent check of [`hermite_h`].
pub fn hermite_h_explicit(k: usize, x: Complex64) -> Result<Complex64> {
    if k > EXPLICIT_MAX_K {
        return Err(Error::InvalidParameter(format!(
            "explicit Hermite formula is limited to k <= {EXPLICIT_MAX_K}, got {k}"
        )));
    }
    let x = DdComplex::from(x);
    let mut pows = Vec::with_capacity(k + 1);
    pows.push(DdComplex::one());
    for p in 1..=k {
        pows.push(pows[p - 1].mul(x));
    }
    let mut sum = DdComplex::zero();
    for j in 0..=k / 2 {
        let mut den = Dd::from(1.0);
        for i in 2..=j {
            den = den.mul(Dd::from(i as f64));
        }
        for i in 2..=(k - 2 * j) {
            den = den.mul(Dd::from(i as f64));
        }
        for _ in 0..j {
            den = den.mul(Dd::from(2.0));
        }
        let mut coeff = Dd::from(1.0).div(den);
        if j % 2 == 1 {
            coeff = coeff.neg();
        }
        sum = sum.add(pows[k - 2 * j].scale(coeff));
    }
    Ok(sum.to_complex())
}

/// `max(1, |x|)^k (k / e^2)^(-k/2)`, with `0^0 = 1` at `k = 0`.
pub fn hermite_bound(k: usize, x_abs: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    (k * x_abs.max(1.0).ln() - 0.5 * k * (k.ln() - 2.0)).exp()
}

/// Inputs of the surrogate sequence: `V_1` of the centered matrix, the
/// declared quasi-variance `xi`, and the evaluation point `z = 1 / mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateInputs {
    pub v1: Complex64,
    pub xi: Complex64,
    pub z: Complex64,
}

impl SurrogateInputs {
    pub fn new(v1: Complex64, xi: Complex64, z: Complex64) -> Result<Self> {
        if xi.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "|xi| = {} exceeds 1",
                xi.norm()
            )));
        }
        Ok(SurrogateInputs { v1, xi, z })
    }
}

/// `V'_k` in closed form: `V_1^k / k!` when `xi = 0`, otherwise
/// `sqrt(xi)^k h_k(V_1 / sqrt(xi))` on the principal branch of the root.
/// The branch cancels because the same root appears in both factors.
pub fn vprime_closed_form(inp: &SurrogateInputs, k: usize) -> Complex64 {
    if inp.xi == Complex64::new(0.0, 0.0) {
        return (1..=k).fold(Complex64::new(1.0, 0.0), |acc, i| acc * inp.v1 / i as f64);
    }
    let root = inp.xi.sqrt();
    root.powu(k as u32) * hermite_h(k, inp.v1 / root)
}

/// `max(|sqrt(xi)|, |V_1|)^k (k / e^2)^(-k/2)`: an upper bound on `|V'_k|`
/// that follows from the Hermite bound.
pub fn vprime_envelope(inp: &SurrogateInputs, k: usize) -> f64 {
    let r = inp.v1.norm().max(inp.xi.norm().sqrt());
    if r == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    hermite_bound(k, 1.0) * r.powi(k as i32)
}

/// `V'_0 ..= V'_m` from `V'_0 = 1`, `V'_1 = V_1`,
/// `V'_k = (V'_{k-1} V_1 - V'_{k-2} xi) / k`, checked against the closed form.
pub fn vprime_sequence(inp: &SurrogateInputs, m: usize) -> Result<Vec<Complex64>> {
    let mut v = Vec::with_capacity(m + 1);
    v.push(Complex64::new(1.0, 0.0));
    if m >= 1 {
        v.push(inp.v1);
    }
    for k in 2..=m {
        let next = (v[k - 1] * inp.v1 - v[k - 2] * inp.xi) / k as f64;
        v.push(next);
    }
    for (k, &vk) in v.iter().enumerate() {
        let closed = vprime_closed_form(inp, k);
        let scale = vk.norm().max(vprime_envelope(inp, k));
        if (vk - closed).norm() > VPRIME_CHECK_TOL * scale {
            return Err(Error::SelfCheck(format!(
                "V'_{k}: recursion {vk} disagrees with closed form {closed}"
            )));
        }
    }
    Ok(v)
}

/// `exp(V_1 z - xi z^2 / 2)`.
pub fn closed_form_estimator(inp: &SurrogateInputs) -> LogComplex {
    LogComplex::from_ln(inp.v1 * inp.z - inp.xi * inp.z * inp.z / 2.0)
}

/// Double-double real: an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from(q3))
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Clone, Copy, Debug)]
struct DdComplex {
    re: Dd,
    im: Dd,
}

impl From<Complex64> for DdComplex {
    fn from(w: Complex64) -> Self {
        DdComplex {
            re: w.re.into(),
            im: w.im.into(),
        }
    }
}

impl DdComplex {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0).into()
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0).into()
    }

    fn add(self, o: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    fn mul(self, o: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    fn scale(self, s: Dd) -> DdComplex {
        DdComplex {
            re: self.re.mul(s),
            im: self.im.mul(s),
        }
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}
