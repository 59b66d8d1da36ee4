//! Independent numerical oracles shared by the integration tests. Nothing in
//! here calls the library's own quadrature or mixture sampler.
#![allow(dead_code)]

use adaptive_k::theory::GaussianMixture;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn z(&self, reference: f64) -> f64 {
        (self.value - reference).abs() / self.se
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub mean: Estimate,
    pub variance: Estimate,
}

fn draw(gm: &GaussianMixture, rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    if rng.gen::<f64>() < gm.tau {
        gm.mu2 + gm.sigma2 * z
    } else {
        gm.mu1 + gm.sigma1 * z
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Pool the `k` smallest of each of `batches` batches of `n` draws. The pooled
/// values are distributed as a uniformly chosen one of the lowest `k` order
/// statistics. Standard errors treat each batch as one observation.
pub fn mc_mkl(gm: &GaussianMixture, n: usize, k: usize, batches: usize, seed: u64) -> MomentEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = Vec::with_capacity(batches);
    let mut second = Vec::with_capacity(batches);
    let mut b = vec![0.0; n];
    for _ in 0..batches {
        b.iter_mut().for_each(|x| *x = draw(gm, &mut rng));
        b.sort_by(f64::total_cmp);
        first.push(b[..k].iter().sum::<f64>() / k as f64);
        second.push(b[..k].iter().map(|x| x * x).sum::<f64>() / k as f64);
    }
    let (m1, sd1) = mean_sd(&first);
    let (m2, _) = mean_sd(&second);
    let influence: Vec<f64> = first.iter().zip(&second).map(|(a, s)| s - 2.0 * m1 * a).collect();
    let (_, sdv) = mean_sd(&influence);
    let root = (batches as f64).sqrt();
    MomentEstimate {
        mean: Estimate { value: m1, se: sd1 / root },
        variance: Estimate { value: m2 - m1 * m1, se: sdv / root },
    }
}

/// Rejection sampling from the mixture restricted to `x <= cut`, keeping
/// `accepted` draws.
pub fn mc_truncated(gm: &GaussianMixture, cut: f64, accepted: usize, seed: u64) -> MomentEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(accepted);
    while xs.len() < accepted {
        let x = draw(gm, &mut rng);
        if x <= cut {
            xs.push(x);
        }
    }
    let (m, sd) = mean_sd(&xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let (v, sdv) = mean_sd(&sq);
    let root = (accepted as f64).sqrt();
    MomentEstimate { mean: Estimate { value: m, se: sd / root }, variance: Estimate { value: v, se: sdv / root } }
}

/// Plain sample mean and variance of `draws` mixture draws.
pub fn mc_mixture(gm: &GaussianMixture, draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..draws).map(|_| draw(gm, &mut rng)).collect();
    let (m, sd) = mean_sd(&xs);
    (m, sd * sd)
}
