//! Standard normal helpers on top of libm's `erf`/`erfc`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn std_cdf(z: f64) -> f64 {
    // erfc keeps relative accuracy in the lower tail
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(z)` without cancellation.
pub fn std_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

pub fn pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    std_pdf((x - mu) / sigma) / sigma
}

/// `F(x) = 0.5 * (1 + erf((x - mu) / (sigma * sqrt 2)))`.
pub fn cdf(x: f64, mu: f64, sigma: f64) -> f64 {
    std_cdf((x - mu) / sigma)
}

pub fn sf(x: f64, mu: f64, sigma: f64) -> f64 {
    std_sf((x - mu) / sigma)
}

/// Mean of a standard normal truncated to `(-inf, b]`.
pub fn upper_truncated_mean(b: f64) -> f64 {
    -std_pdf(b) / std_cdf(b)
}

/// Variance of a standard normal truncated to `(-inf, b]`.
pub fn upper_truncated_variance(b: f64) -> f64 {
    let ratio = std_pdf(b) / std_cdf(b);
    1.0 - b * ratio - ratio * ratio
}

pub fn sqrt_2_over_pi() -> f64 {
    (2.0 / PI).sqrt()
}
