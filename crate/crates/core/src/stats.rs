//! Summary statistics for Monte Carlo tables.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::EntryStream;

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// `|mean - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return MeanSe { mean, se: f64::NAN };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    MeanSe {
        mean,
        se: (var / n).sqrt(),
    }
}

/// Mean of complex samples with separate standard errors per component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMeanSe {
    pub re: MeanSe,
    pub im: MeanSe,
}

impl ComplexMeanSe {
    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean, self.im.mean)
    }

    /// Each component within `k` standard errors of the target. A component
    /// with zero spread must match exactly.
    pub fn within(&self, target: Complex64, k: f64) -> bool {
        self.re.within(target.re, k) && self.im.within(target.im, k)
    }
}

pub fn complex_mean_se(xs: &[Complex64]) -> ComplexMeanSe {
    let re: Vec<f64> = xs.iter().map(|w| w.re).collect();
    let im: Vec<f64> = xs.iter().map(|w| w.im).collect();
    ComplexMeanSe {
        re: mean_se(&re),
        im: mean_se(&im),
    }
}

/// Median (mean of the two middle values for even length); NaN when empty.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn fraction(flags: impl IntoIterator<Item = bool>) -> f64 {
    let (hits, total) = flags
        .into_iter()
        .fold((0usize, 0usize), |(h, t), f| (h + usize::from(f), t + 1));
    if total == 0 {
        f64::NAN
    } else {
        hits as f64 / total as f64
    }
}

/// Bootstrap standard error of `stat` over paired resamples of rows.
///
/// Each resample draws `rows.len()` row indices with replacement; the
/// generator is keyed by `seed`, so the result is reproducible.
pub fn bootstrap_se<T>(rows: &[T], resamples: usize, seed: u64, stat: impl Fn(&[&T]) -> f64) -> f64 {
    let len = rows.len();
    if len == 0 || resamples < 2 {
        return f64::NAN;
    }
    let values: Vec<f64> = (0..resamples)
        .map(|b| {
            let mut rng = EntryStream::new(seed, b as u64);
            let pick: Vec<&T> = (0..len).map(|_| &rows[rng.random_range(0..len)]).collect();
            stat(&pick)
        })
        .collect();
    let ms = mean_se(&values);
    // se of the mean times sqrt(B) is the spread of the resampled statistic.
    ms.se * (resamples as f64).sqrt()
}
