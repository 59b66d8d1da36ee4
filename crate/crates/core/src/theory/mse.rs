use serde::Serialize;

use super::mixture::GaussianMixture;
use super::order_stats::mkl_moments;
use super::truncated::adaptive_moments;
use super::TheoryError;

/// Squared bias against the clean mean plus the variance of the whole mixture.
pub fn mse_sgd(gm: &GaussianMixture) -> Result<f64, TheoryError> {
    gm.validate()?;
    let m = gm.moments();
    let bias = m.mean - gm.mu1;
    Ok(bias * bias + m.variance)
}

pub fn mse_mkl(gm: &GaussianMixture, n: usize, k: usize) -> Result<f64, TheoryError> {
    let m = mkl_moments(gm, n, k)?;
    let bias = gm.mu1 - m.mean;
    Ok(bias * bias + m.variance)
}

pub fn mse_adk(gm: &GaussianMixture) -> Result<f64, TheoryError> {
    let m = adaptive_moments(gm)?;
    let bias = gm.mu1 - m.mean;
    Ok(bias * bias + m.variance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseReport {
    pub mse_sgd: f64,
    pub mse_mkl: f64,
    pub mse_adk: f64,
    pub params: GaussianMixture,
    pub n: usize,
    pub k: usize,
}

impl MseReport {
    pub fn compute(gm: &GaussianMixture, n: usize, k: usize) -> Result<Self, TheoryError> {
        Ok(Self {
            mse_sgd: mse_sgd(gm)?,
            mse_mkl: mse_mkl(gm, n, k)?,
            mse_adk: mse_adk(gm)?,
            params: *gm,
            n,
            k,
        })
    }

    pub fn mkl_beats_sgd(&self) -> bool {
        self.mse_mkl < self.mse_sgd
    }

    pub fn adk_beats_mkl(&self) -> bool {
        self.mse_adk < self.mse_mkl
    }
}
