use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::normal;
use super::TheoryError;

/// Two-component loss model: clean losses `N(mu1, sigma1^2)` with weight
/// `1 - tau`, noisy losses `N(mu2, sigma2^2)` with weight `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianMixture {
    pub fn new(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64, tau: f64) -> Result<Self, TheoryError> {
        let gm = Self { mu1, sigma1, mu2, sigma2, tau };
        gm.validate()?;
        Ok(gm)
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        let finite = [self.mu1, self.sigma1, self.mu2, self.sigma2, self.tau]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(TheoryError::InvalidMixture("parameters must be finite".into()));
        }
        if self.sigma1 <= 0.0 || self.sigma2 <= 0.0 {
            return Err(TheoryError::InvalidMixture(format!(
                "standard deviations must be positive (sigma1 = {}, sigma2 = {})",
                self.sigma1, self.sigma2
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(TheoryError::InvalidMixture(format!("tau = {} not in [0, 1]", self.tau)));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (1.0 - self.tau) * normal::pdf(x, self.mu1, self.sigma1) + self.tau * normal::pdf(x, self.mu2, self.sigma2)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (1.0 - self.tau) * normal::cdf(x, self.mu1, self.sigma1) + self.tau * normal::cdf(x, self.mu2, self.sigma2)
    }

    /// `1 - cdf(x)`, evaluated from the upper tails directly.
    pub fn sf(&self, x: f64) -> f64 {
        (1.0 - self.tau) * normal::sf(x, self.mu1, self.sigma1) + self.tau * normal::sf(x, self.mu2, self.sigma2)
    }

    pub fn mean(&self) -> f64 {
        (1.0 - self.tau) * self.mu1 + self.tau * self.mu2
    }

    pub fn moments(&self) -> Moments {
        let mean = self.mean();
        let w1 = 1.0 - self.tau;
        let w2 = self.tau;
        let d1 = self.mu1 - mean;
        let d2 = self.mu2 - mean;
        let variance = w1 * self.sigma1 * self.sigma1 + w2 * self.sigma2 * self.sigma2 + w1 * d1 * d1 + w2 * d2 * d2;
        Moments { mean, variance }
    }

    /// Finite window holding all but a negligible tail of the mass:
    /// ten of the wider standard deviations beyond either component mean.
    pub fn support(&self) -> (f64, f64) {
        let spread = 10.0 * self.sigma1.max(self.sigma2);
        (self.mu1.min(self.mu2) - spread, self.mu1.max(self.mu2) + spread)
    }

    /// Points worth aligning quadrature panels with.
    pub fn landmarks(&self) -> Vec<f64> {
        vec![self.mu1, self.mu2, self.mean()]
    }

    /// Draws one loss; the flag is true when it came from the noisy component.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        let noisy = rng.gen::<f64>() < self.tau;
        let z: f64 = rng.sample(StandardNormal);
        if noisy {
            (self.mu2 + self.sigma2 * z, true)
        } else {
            (self.mu1 + self.sigma1 * z, false)
        }
    }
}
