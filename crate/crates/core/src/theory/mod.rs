//! Mixture-model analysis of the three selection rules.
//!
//! Losses are modelled as a two-component Gaussian mixture (clean and noisy).
//! Each rule induces a distribution over the losses it keeps: the whole mixture
//! for vanilla SGD, the average of the lowest `k` of `n` order statistics for
//! min-k, and the mixture truncated at its mean for Adaptive-k. The MSE of a
//! rule is the squared distance of that distribution's mean from the clean mean
//! plus its variance. Means and variances without closed forms are computed by
//! adaptive quadrature.

pub mod mixture;
pub mod normal;
pub mod order_stats;
pub mod quad;
pub mod surface;
pub mod truncated;
mod mse;

use thiserror::Error;

pub use mixture::{GaussianMixture, Moments};
pub use mse::{mse_adk, mse_mkl, mse_sgd, MseReport};
pub use order_stats::{mkl_moments, mkl_pdf, mkl_selection_quality, order_statistic_pdf, SelectionQuality};
pub use surface::{mse_surface, Axis, SurfaceBase, SurfaceGrid, SweepParam};
pub use truncated::{adaptive_moments, adaptive_pdf};

use quad::{integrate_with_breaks, QuadError, QuadOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("order statistic k = {k} out of range for n = {n}")]
    OrderOutOfRange { n: usize, k: usize },
    #[error("batch size {n} exceeds supported maximum {max}")]
    BatchTooLarge { n: usize, max: usize },
    #[error("empty truncation region")]
    EmptyTruncation,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub fn mixture_pdf(gm: &GaussianMixture, x: f64) -> f64 {
    gm.pdf(x)
}

pub fn mixture_cdf(gm: &GaussianMixture, x: f64) -> f64 {
    gm.cdf(x)
}

pub fn mixture_moments(gm: &GaussianMixture) -> Moments {
    gm.moments()
}

/// Mean and variance of a density given on `[lo, hi]`.
pub(crate) fn integrate_density<F: Fn(f64) -> f64>(
    density: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<Moments, TheoryError> {
    let first = integrate_with_breaks(|x| x * density(x), lo, hi, breaks, opts)?.value;
    let second = integrate_with_breaks(|x| x * x * density(x), lo, hi, breaks, opts)?.value;
    let variance = (second - first * first).max(0.0);
    Ok(Moments { mean: first, variance })
}

/// Total mass of a density on `[lo, hi]`; used to check normalization.
pub fn total_mass<F: Fn(f64) -> f64>(
    density: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<f64, TheoryError> {
    Ok(integrate_with_breaks(density, lo, hi, breaks, opts)?.value)
}
