//! Average-case approximation of `Per(R)` for `R` with i.i.d. entries of
//! mean `mu`.
//!
//! With `z = 1/mu` and `A = R - mu J`, `Per(R) = mu^n Per(J + zA)` and
//! `Per(J + zA) / n! = sum_k a_k z^k`. Three estimators are provided:
//!
//! * [`approx_truncated`] keeps `a_0 ..= a_t`, `t = ceil(ln n + ln(1/eps))`;
//! * [`approx_simple`] replaces the series by `exp(V_1 z - xi z^2 / 2)`;
//! * [`approx_ptas`] uses the simple estimator while `eps > n^(-rho)` and
//!   the exact permanent otherwise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{
    coefficients_interpolation_with, coefficients_submatrix, interpolation_work, submatrix_work,
    truncated_series, CoefficientSeries, COEFFICIENT_BUDGET,
};
use crate::distributions::centered;
use crate::error::{Error, Result};
use crate::exact::{permanent_ryser_with, RyserOptions};
use crate::hermite::{closed_form_estimator, SurrogateInputs};
use crate::scalars::{ln_factorial, ComplexMatrix, LogComplex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub c: f64,
    pub nu: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Exponent of the PTAS switch `eps > n^(-rho_ptas)`.
    pub rho_ptas: f64,
    pub eps: f64,
}

/// `c = 0.10, nu = 0.12, gamma = 0.015, beta = 0.40, rho_ptas = 0.02`.
pub fn default_config(eps: f64) -> Result<ApproxConfig> {
    let cfg = ApproxConfig {
        c: 0.10,
        nu: 0.12,
        gamma: 0.015,
        beta: 0.40,
        rho_ptas: 0.02,
        eps,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ApproxConfig {
    /// Checks `0 < c < nu < 1/8`, `0 < gamma < beta < 1/2`,
    /// `gamma < nu - c`, `0 < rho_ptas < 1/8 - c` and `0 < eps < 1`.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{what} ({self:?})")));
        if !(0.0 < self.c && self.c < self.nu && self.nu < 0.125) {
            return bad("need 0 < c < nu < 1/8");
        }
        if !(0.0 < self.gamma && self.gamma < self.beta && self.beta < 0.5) {
            return bad("need 0 < gamma < beta < 1/2");
        }
        if self.gamma >= self.nu - self.c {
            return bad("need gamma < nu - c");
        }
        if !(0.0 < self.rho_ptas && self.rho_ptas < 0.125 - self.c) {
            return bad("need 0 < rho_ptas < 1/8 - c");
        }
        if !(0.0 < self.eps && self.eps < 1.0) {
            return bad("need 0 < eps < 1");
        }
        Ok(())
    }

    /// Truncation degree `ceil(ln n + ln(1/eps))`, at least 1.
    pub fn truncation(&self, n: usize) -> usize {
        let t = ((n as f64).ln() + (1.0 / self.eps).ln()).ceil();
        (t.max(1.0)) as usize
    }

    /// `theta(n) = ln ln n`, the concentration threshold for `|V_1|`.
    pub fn theta(n: usize) -> f64 {
        (n as f64).ln().ln()
    }

    /// Whether `|z| <= (ln n)^c`.
    pub fn z_admissible(&self, n: usize, z: Complex64) -> bool {
        z.norm() <= (n as f64).ln().powf(self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Truncated,
    Simple,
    ExactFallback,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Truncated => "truncated",
            Algorithm::Simple => "simple",
            Algorithm::ExactFallback => "exact-fallback",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: LogComplex,
    pub algorithm: Algorithm,
    pub t_used: Option<usize>,
    /// `1 / mu` as used.
    pub z: Complex64,
    /// `|z| <= (ln n)^c`; outside that range the estimators are still
    /// defined but the average-case guarantee does not apply.
    pub z_admissible: bool,
}

/// How [`approx_truncated`] obtains `a_0 ..= a_t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoefficientStrategy {
    /// Interpolation when `n` is within the Ryser limit and cheaper,
    /// submatrix enumeration otherwise.
    Auto,
    Submatrix,
    Interpolation,
}

fn inverse_mean(mu: Complex64) -> Result<Complex64> {
    if mu == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroMean);
    }
    Ok(mu.inv())
}

/// `mu^n n! w` in log form.
fn rescale(mu: Complex64, n: usize, w: LogComplex) -> LogComplex {
    LogComplex::from_complex(mu).powu(n as u32) * w.scale_ln(ln_factorial(n))
}

fn admissible(cfg: Option<&ApproxConfig>, n: usize, z: Complex64) -> bool {
    let c = cfg.map_or(0.10, |c| c.c);
    let ok = z.norm() <= (n as f64).ln().powf(c);
    if !ok {
        log::debug!("|z| = {:.4} exceeds (ln n)^c = {:.4} for n = {n}", z.norm(), (n as f64).ln().powf(c));
    }
    ok
}

/// `a_0 ..= a_t` of `A` by the chosen route.
pub fn series_for(
    a: &ComplexMatrix,
    t: usize,
    strategy: CoefficientStrategy,
    ryser: &RyserOptions,
) -> Result<CoefficientSeries> {
    let n = a.n();
    let t = t.min(n);
    let use_interp = match strategy {
        CoefficientStrategy::Interpolation => true,
        CoefficientStrategy::Submatrix => false,
        CoefficientStrategy::Auto => {
            let sub: f64 = (0..=t).map(|k| submatrix_work(n, k)).sum();
            n <= ryser.max_n && interpolation_work(n) <= sub
        }
    };
    if use_interp {
        let mut s = coefficients_interpolation_with(a, ryser)?;
        s.coeffs.truncate(t + 1);
        Ok(s)
    } else {
        coefficients_submatrix(a, t, COEFFICIENT_BUDGET)
    }
}

/// Truncated-series estimator with `t` taken from `cfg`.
pub fn approx_truncated(r: &ComplexMatrix, mu: Complex64, cfg: &ApproxConfig) -> Result<Estimate> {
    cfg.validate()?;
    let t = cfg.truncation(r.n());
    let mut est = approx_truncated_with_t(r, mu, t, CoefficientStrategy::Auto, &RyserOptions::default())?;
    est.z_admissible = admissible(Some(cfg), r.n(), est.z);
    Ok(est)
}

/// `mu^n n! sum_{k=0}^t a_k z^k` for an explicit truncation `t` (capped at `n`).
pub fn approx_truncated_with_t(
    r: &ComplexMatrix,
    mu: Complex64,
    t: usize,
    strategy: CoefficientStrategy,
    ryser: &RyserOptions,
) -> Result<Estimate> {
    let z = inverse_mean(mu)?;
    let n = r.n();
    let a = centered(r, mu);
    let series = series_for(&a, t, strategy, ryser)?;
    let t_used = series.max_k();
    let sum = truncated_series(&series, z, t_used)?;
    Ok(Estimate {
        value: rescale(mu, n, LogComplex::from_complex(sum)),
        algorithm: Algorithm::Truncated,
        t_used: Some(t_used),
        z,
        z_admissible: admissible(None, n, z),
    })
}

/// `V_1 = n^(-1) sum_{i,j} A[i][j]` for `A = R - mu J`.
pub fn v1_of(r: &ComplexMatrix, mu: Complex64) -> Complex64 {
    let n = r.n() as f64;
    r.as_slice().iter().map(|&x| x - mu).sum::<Complex64>() / n
}

/// `mu^n n! exp(V_1 z - xi z^2 / 2)`; linear in the number of entries.
pub fn approx_simple(r: &ComplexMatrix, mu: Complex64, xi: Complex64) -> Result<Estimate> {
    let z = inverse_mean(mu)?;
    let n = r.n();
    let inp = SurrogateInputs::new(v1_of(r, mu), xi, z)?;
    Ok(Estimate {
        value: rescale(mu, n, closed_form_estimator(&inp)),
        algorithm: Algorithm::Simple,
        t_used: None,
        z,
        z_admissible: admissible(None, n, z),
    })
}

/// Simple estimator when `eps > n^(-rho_ptas)`, exact Ryser otherwise.
pub fn approx_ptas(
    r: &ComplexMatrix,
    mu: Complex64,
    xi: Complex64,
    cfg: &ApproxConfig,
) -> Result<Estimate> {
    approx_ptas_with(r, mu, xi, cfg, &RyserOptions::default())
}

pub fn approx_ptas_with(
    r: &ComplexMatrix,
    mu: Complex64,
    xi: Complex64,
    cfg: &ApproxConfig,
    ryser: &RyserOptions,
) -> Result<Estimate> {
    cfg.validate()?;
    let z = inverse_mean(mu)?;
    let n = r.n();
    if ptas_uses_simple(n, cfg) {
        let mut est = approx_simple(r, mu, xi)?;
        est.z_admissible = admissible(Some(cfg), n, z);
        return Ok(est);
    }
    if n > ryser.max_n {
        return Err(Error::ExactFallbackTooLarge {
            n,
            limit: ryser.max_n,
        });
    }
    Ok(Estimate {
        value: permanent_ryser_with(r, ryser)?,
        algorithm: Algorithm::ExactFallback,
        t_used: None,
        z,
        z_admissible: true,
    })
}

/// The PTAS switch: `eps > n^(-rho_ptas)`.
pub fn ptas_uses_simple(n: usize, cfg: &ApproxConfig) -> bool {
    cfg.eps > (n as f64).powf(-cfg.rho_ptas)
}
