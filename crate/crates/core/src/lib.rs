//! Exact permanents of complex matrices and average-case approximation of
//! permanents of random matrices whose entries have a small nonzero mean.
//!
//! The entry point for most users is [`approx`]: given `R` with i.i.d.
//! entries of mean `mu`, the matrix is rewritten as `R = (J + zA) / z` with
//! `z = 1 / mu` and `A` centered, and the normalized permanent
//! `Per(J + zA) / n!` is approximated either by its truncated power series
//! in `z` or by the closed form `exp(V_1 z - xi z^2 / 2)`.
//!
//! Everything that can grow like `n!` is carried as a [`LogComplex`].

pub mod approx;
pub mod coefficients;
pub mod distributions;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod hermite;
pub mod scalars;
pub mod stats;
pub mod symmetric;

pub use num_complex::Complex64;

pub use approx::{
    approx_ptas, approx_simple, approx_truncated, approx_truncated_with_t, default_config,
    Algorithm, ApproxConfig, CoefficientStrategy, Estimate,
};
pub use coefficients::{
    coefficient_submatrix, coefficients_interpolation, coefficients_submatrix, falling_factorial,
    truncated_series, CoefficientMethod, CoefficientSeries,
};
pub use distributions::{
    builtin_distribution, centered_matrix, sample_matrix, DistributionKind, EntryDistribution,
    MatrixSample,
};
pub use error::{Error, Result};
pub use exact::{permanent_naive, permanent_of_j_plus_za, permanent_ryser, RyserOptions};
pub use hermite::{
    closed_form_estimator, hermite_h, hermite_h_explicit, vprime_sequence, SurrogateInputs,
};
pub use scalars::{ln_factorial, relative_error, ComplexMatrix, LogComplex};
pub use symmetric::{
    column_sums, compute_v_d, elementary_symmetric_direct, elementary_symmetric_newton,
    power_sums, ColumnStats,
};
