//! Entry distributions with known moments and i.i.d. random matrices.
//!
//! Every entry `(i, j)` of a sampled matrix is drawn from its own generator,
//! keyed by `(seed, i * n + j)`, so sampling order and thread count never
//! change the result.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalars::ComplexMatrix;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijection on `u64` with full avalanche.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of the stream that feeds counter `index` under `seed`.
///
/// `key = seed ^ mix64((index + 1) * GOLDEN_GAMMA)`; distinct indices give
/// distinct keys for a fixed seed because `mix64` is a bijection.
pub fn stream_key(seed: u64, index: u64) -> u64 {
    seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// Counter-based generator: output `c` is `mix64(key + (c + 1) * GOLDEN_GAMMA)`,
/// i.e. a SplitMix64 sequence started from `key`.
#[derive(Clone, Debug)]
pub struct EntryStream {
    state: u64,
}

impl EntryStream {
    pub fn new(seed: u64, index: u64) -> Self {
        EntryStream {
            state: stream_key(seed, index),
        }
    }
}

impl RngCore for EntryStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Built-in entry families, all with unit variance `E|x - mu|^2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionKind {
    /// Real and imaginary parts independent `N(0, 1/2)`, shifted by `mu`.
    ComplexGaussian,
    /// `N(0, 1)` shifted by `mu`.
    RealGaussian,
    /// `mu + 1` or `mu - 1` with probability 1/2 each.
    ShiftedRademacher,
    /// User-supplied sampler with declared moments.
    Custom,
}

impl DistributionKind {
    pub const BUILTIN: [DistributionKind; 3] = [
        DistributionKind::ComplexGaussian,
        DistributionKind::RealGaussian,
        DistributionKind::ShiftedRademacher,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DistributionKind::ComplexGaussian => "complex-gaussian",
            DistributionKind::RealGaussian => "real-gaussian",
            DistributionKind::ShiftedRademacher => "shifted-rademacher",
            DistributionKind::Custom => "custom",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::BUILTIN
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownDistribution(s.to_string()))
    }
}

/// Draws a centered (mean zero, unit variance) sample.
pub type CenteredSampler = Arc<dyn Fn(&mut EntryStream) -> Complex64 + Send + Sync>;

/// An entry distribution `D_mu`: mean `mu`, unit variance, quasi-variance
/// `xi = E(x - mu)^2` and third absolute central moment `rho = E|x - mu|^3`.
#[derive(Clone)]
pub struct EntryDistribution {
    kind: DistributionKind,
    mu: Complex64,
    xi: Complex64,
    rho: f64,
    custom: Option<CenteredSampler>,
}

impl fmt::Debug for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntryDistribution")
            .field("kind", &self.kind)
            .field("mu", &self.mu)
            .field("xi", &self.xi)
            .field("rho", &self.rho)
            .finish()
    }
}

impl PartialEq for EntryDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.kind != DistributionKind::Custom
            && self.kind == other.kind
            && self.mu == other.mu
    }
}

/// `E|g|^3` for a standard complex gaussian: `|g|^2 ~ Exp(1)`, so this is
/// `Gamma(5/2) = 3 sqrt(pi) / 4`.
pub const COMPLEX_GAUSSIAN_RHO: f64 = 0.75 * 1.772_453_850_905_516;

/// `E|g|^3 = 2 sqrt(2 / pi)` for a standard real gaussian.
pub const REAL_GAUSSIAN_RHO: f64 = 1.595_769_121_605_730_7;

/// One of the built-in families, shifted to mean `mu`.
pub fn builtin_distribution(kind: DistributionKind, mu: Complex64) -> Result<EntryDistribution> {
    let (xi, rho) = match kind {
        DistributionKind::ComplexGaussian => (0.0, COMPLEX_GAUSSIAN_RHO),
        DistributionKind::RealGaussian => (1.0, REAL_GAUSSIAN_RHO),
        DistributionKind::ShiftedRademacher => (1.0, 1.0),
        DistributionKind::Custom => {
            return Err(Error::UnknownDistribution(
                "custom distributions are built with EntryDistribution::custom".into(),
            ))
        }
    };
    if !(mu.re.is_finite() && mu.im.is_finite()) {
        return Err(Error::InvalidParameter("mu must be finite".into()));
    }
    Ok(EntryDistribution {
        kind,
        mu,
        xi: Complex64::new(xi, 0.0),
        rho,
        custom: None,
    })
}

impl EntryDistribution {
    /// A distribution given by a centered, unit-variance sampler whose
    /// quasi-variance and third moment are declared analytically.
    pub fn custom(
        mu: Complex64,
        xi: Complex64,
        rho: f64,
        sampler: impl Fn(&mut EntryStream) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if xi.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "|xi| = {} exceeds the unit variance",
                xi.norm()
            )));
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be finite and >= 0")));
        }
        Ok(EntryDistribution {
            kind: DistributionKind::Custom,
            mu,
            xi,
            rho,
            custom: Some(Arc::new(sampler)),
        })
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    pub fn xi(&self) -> Complex64 {
        self.xi
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Same family with a different mean.
    pub fn with_mu(&self, mu: Complex64) -> Self {
        EntryDistribution { mu, ..self.clone() }
    }

    /// Draws `x - mu` from `stream`.
    pub fn sample_centered(&self, stream: &mut EntryStream) -> Complex64 {
        match self.kind {
            DistributionKind::ComplexGaussian => {
                let re: f64 = stream.sample(StandardNormal);
                let im: f64 = stream.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            DistributionKind::RealGaussian => Complex64::new(stream.sample(StandardNormal), 0.0),
            DistributionKind::ShiftedRademacher => {
                let sign = if stream.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign, 0.0)
            }
            DistributionKind::Custom => {
                (self.custom.as_ref().expect("custom distribution without sampler"))(stream)
            }
        }
    }

    /// The value at counter `index` of the stream family keyed by `seed`.
    pub fn sample_entry(&self, seed: u64, index: u64) -> Complex64 {
        self.mu + self.sample_centered(&mut EntryStream::new(seed, index))
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    kind: String,
    mu_re: f64,
    #[serde(default)]
    mu_im: f64,
}

impl Serialize for EntryDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.kind == DistributionKind::Custom {
            return Err(S::Error::custom("custom distributions have no file form"));
        }
        DistributionJson {
            kind: self.kind.as_str().to_string(),
            mu_re: self.mu.re,
            mu_im: self.mu.im,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EntryDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = DistributionJson::deserialize(deserializer)?;
        let kind = raw.kind.parse().map_err(D::Error::custom)?;
        builtin_distribution(kind, Complex64::new(raw.mu_re, raw.mu_im)).map_err(D::Error::custom)
    }
}

/// A sampled matrix `R` together with everything needed to regenerate it.
#[derive(Clone, Debug)]
pub struct MatrixSample {
    pub matrix: ComplexMatrix,
    pub seed: u64,
    pub dist: EntryDistribution,
}

/// Below this many entries the parallel split costs more than it saves.
const PARALLEL_ENTRIES: usize = 1 << 14;

/// Samples `R` with i.i.d. entries; entry `(i, j)` is
/// `dist.sample_entry(seed, i * n + j)`.
pub fn sample_matrix(dist: &EntryDistribution, n: usize, seed: u64) -> Result<MatrixSample> {
    if n == 0 {
        return Err(Error::InvalidParameter("matrix dimension must be >= 1".into()));
    }
    let len = n * n;
    let data: Vec<Complex64> = if len >= PARALLEL_ENTRIES {
        (0..len as u64)
            .into_par_iter()
            .map(|idx| dist.sample_entry(seed, idx))
            .collect()
    } else {
        (0..len as u64).map(|idx| dist.sample_entry(seed, idx)).collect()
    };
    Ok(MatrixSample {
        matrix: ComplexMatrix::new(n, data)?,
        seed,
        dist: dist.clone(),
    })
}

/// `A = R - mu J`.
pub fn centered_matrix(sample: &MatrixSample) -> ComplexMatrix {
    centered(&sample.matrix, sample.dist.mu())
}

pub(crate) fn centered(r: &ComplexMatrix, mu: Complex64) -> ComplexMatrix {
    r.map(|x| x - mu)
}

/// Angle helper kept for custom samplers: a uniform phase on `[0, 2 pi)`.
pub fn uniform_phase(stream: &mut EntryStream) -> f64 {
    2.0 * PI * stream.random::<f64>()
}
