//! The mixture restricted to losses at or below its own mean and renormalized:
//! the loss distribution a threshold at the population mean keeps.

use super::mixture::GaussianMixture;
use super::{integrate_density, Moments, TheoryError};
use crate::theory::quad::QuadOptions;

fn truncation_mass(gm: &GaussianMixture) -> Result<(f64, f64), TheoryError> {
    gm.validate()?;
    let cut = gm.mean();
    let mass = gm.cdf(cut);
    if mass <= 0.0 {
        return Err(TheoryError::EmptyTruncation);
    }
    Ok((cut, mass))
}

pub fn adaptive_pdf(gm: &GaussianMixture, x: f64) -> Result<f64, TheoryError> {
    let (cut, mass) = truncation_mass(gm)?;
    Ok(if x <= cut { gm.pdf(x) / mass } else { 0.0 })
}

pub fn adaptive_moments(gm: &GaussianMixture) -> Result<Moments, TheoryError> {
    adaptive_moments_with(gm, &QuadOptions::default())
}

pub fn adaptive_moments_with(gm: &GaussianMixture, opts: &QuadOptions) -> Result<Moments, TheoryError> {
    let (cut, mass) = truncation_mass(gm)?;
    let (lo, _) = gm.support();
    let breaks: Vec<f64> = gm.landmarks().into_iter().filter(|&b| b < cut).collect();
    integrate_density(|x| gm.pdf(x) / mass, lo, cut, &breaks, opts)
}
