//! Order statistics of a mini-batch drawn from the mixture, and the
//! distribution of losses kept by the min-k rule.

use super::mixture::GaussianMixture;
use super::{integrate_density, normal, Moments, TheoryError};
use crate::theory::quad::{integrate_with_breaks, QuadOptions};

pub const MAX_BATCH: usize = 64;

pub fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

fn check_order(n: usize, k: usize) -> Result<(), TheoryError> {
    if n > MAX_BATCH {
        return Err(TheoryError::BatchTooLarge { n, max: MAX_BATCH });
    }
    if k == 0 || k > n {
        return Err(TheoryError::OrderOutOfRange { n, k });
    }
    Ok(())
}

fn order_term(n: usize, k: usize, density: f64, below: f64, above: f64) -> f64 {
    let coeff = ((n as f64).ln() + ln_choose(n - 1, k - 1)).exp();
    coeff * density * below.powi(k as i32 - 1) * above.powi((n - k) as i32)
}

/// Density of the `k`-th smallest of `n` i.i.d. draws from `gm`.
pub fn order_statistic_pdf(gm: &GaussianMixture, n: usize, k: usize, x: f64) -> Result<f64, TheoryError> {
    check_order(n, k)?;
    Ok(order_term(n, k, gm.pdf(x), gm.cdf(x), gm.sf(x)))
}

/// Density of a loss picked uniformly from the `k` smallest of `n` draws:
/// the average of the first `k` order-statistic densities.
pub fn mkl_pdf(gm: &GaussianMixture, n: usize, k: usize, x: f64) -> Result<f64, TheoryError> {
    check_order(n, k)?;
    Ok(mkl_density(gm, n, k, x))
}

fn mkl_density(gm: &GaussianMixture, n: usize, k: usize, x: f64) -> f64 {
    let (density, below, above) = (gm.pdf(x), gm.cdf(x), gm.sf(x));
    (1..=k).map(|p| order_term(n, p, density, below, above)).sum::<f64>() / k as f64
}

pub fn mkl_moments(gm: &GaussianMixture, n: usize, k: usize) -> Result<Moments, TheoryError> {
    mkl_moments_with(gm, n, k, &QuadOptions::default())
}

pub fn mkl_moments_with(gm: &GaussianMixture, n: usize, k: usize, opts: &QuadOptions) -> Result<Moments, TheoryError> {
    gm.validate()?;
    check_order(n, k)?;
    let (lo, hi) = gm.support();
    integrate_density(|x| mkl_density(gm, n, k, x), lo, hi, &gm.landmarks(), opts)
}

/// Expected per-batch precision and recall of the min-k rule when batches of
/// `n` losses are drawn from `gm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionQuality {
    pub precision: f64,
    /// Averaged over batches holding at least one clean sample.
    pub recall: f64,
}

fn binomial_pmf(trials: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    (0..=trials)
        .map(|j| ln_choose(trials, j).exp() * p.powi(j as i32) * q.powi((trials - j) as i32))
        .collect()
}

/// Probability that fewer than `k` of the other samples fall below a clean
/// sample at `x`, given `clean` clean samples in an `n`-sample batch.
fn clean_kept_probability(gm: &GaussianMixture, n: usize, clean: usize, k: usize, x: f64) -> f64 {
    let below_clean = normal::cdf(x, gm.mu1, gm.sigma1);
    let below_noisy = normal::cdf(x, gm.mu2, gm.sigma2);
    let a = binomial_pmf(clean - 1, below_clean);
    let b = binomial_pmf(n - clean, below_noisy);
    let mut total = 0.0;
    for (i, pa) in a.iter().enumerate().take(k) {
        let budget = k - 1 - i;
        total += pa * b.iter().take(budget + 1).sum::<f64>();
    }
    total
}

/// Exact expected selection quality of the min-k rule, from order statistics
/// of the two components.
pub fn mkl_selection_quality(gm: &GaussianMixture, n: usize, k: usize) -> Result<SelectionQuality, TheoryError> {
    gm.validate()?;
    check_order(n, k.min(n))?;
    let k = k.min(n);
    let (lo, hi) = gm.support();
    let opts = QuadOptions::default();
    let breaks = gm.landmarks();

    // P(a given sample is clean and kept), unconditional on the batch make-up
    let kept = integrate_with_breaks(
        |x| {
            let below = gm.cdf(x);
            let others = binomial_pmf(n - 1, below);
            normal::pdf(x, gm.mu1, gm.sigma1) * others.iter().take(k).sum::<f64>()
        },
        lo,
        hi,
        &breaks,
        &opts,
    )?
    .value;
    let precision = n as f64 * (1.0 - gm.tau) * kept / k as f64;

    let clean_counts = binomial_pmf(n, 1.0 - gm.tau);
    let mut weighted = 0.0;
    let mut mass = 0.0;
    for (clean, &pc) in clean_counts.iter().enumerate().skip(1) {
        if pc == 0.0 {
            continue;
        }
        let r = integrate_with_breaks(
            |x| normal::pdf(x, gm.mu1, gm.sigma1) * clean_kept_probability(gm, n, clean, k, x),
            lo,
            hi,
            &breaks,
            &opts,
        )?
        .value;
        weighted += pc * r;
        mass += pc;
    }
    let recall = if mass > 0.0 { weighted / mass } else { f64::NAN };
    Ok(SelectionQuality { precision, recall })
}
