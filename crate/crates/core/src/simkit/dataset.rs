use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Labeled features plus the ground truth needed to score selections.
/// Training code only reads `features` and `observed_labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    /// Row-major, `n_samples * n_features`.
    pub features: Vec<f64>,
    pub n_features: usize,
    pub observed_labels: Vec<usize>,
    pub true_labels: Vec<usize>,
    pub noise_flags: Vec<bool>,
    pub n_classes: usize,
}

impl NoisyDataset {
    pub fn len(&self) -> usize {
        self.observed_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed_labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn noise_ratio(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.noise_flags.iter().filter(|&&f| f).count() as f64 / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub class_separation: f64,
}

/// Class centers with every pairwise distance at least `separation`.
///
/// With enough dimensions the centers sit on scaled basis vectors, so all
/// pairs are exactly `separation` apart. Otherwise they go on a regular polygon
/// in the first two coordinates with adjacent vertices `separation` apart.
pub fn blob_centers(n_features: usize, n_classes: usize, separation: f64) -> Vec<Vec<f64>> {
    if n_features >= n_classes {
        let scale = separation / std::f64::consts::SQRT_2;
        (0..n_classes)
            .map(|c| {
                let mut v = vec![0.0; n_features];
                v[c] = scale;
                v
            })
            .collect()
    } else {
        let angle = std::f64::consts::TAU / n_classes as f64;
        let radius = separation / (2.0 * (angle / 2.0).sin());
        (0..n_classes)
            .map(|c| {
                let mut v = vec![0.0; n_features];
                v[0] = radius * (angle * c as f64).cos();
                v[1] = radius * (angle * c as f64).sin();
                v
            })
            .collect()
    }
}

/// Isotropic unit-variance Gaussian clusters, one per class, with uniformly
/// drawn class labels. Centers depend only on the spec, so train and test sets
/// drawn with different seeds share a distribution.
pub fn make_blobs(spec: &BlobSpec, seed: u64) -> Result<NoisyDataset, SimError> {
    if spec.n_classes < 2 {
        return Err(SimError::InvalidConfig(format!("n_classes = {} must be at least 2", spec.n_classes)));
    }
    if spec.n_samples == 0 {
        return Err(SimError::InvalidConfig("n_samples must be positive".into()));
    }
    if spec.n_features < 2 && spec.n_features < spec.n_classes {
        return Err(SimError::InvalidConfig(format!(
            "{} classes need at least 2 features (got {})",
            spec.n_classes, spec.n_features
        )));
    }
    if !(spec.class_separation > 0.0 && spec.class_separation.is_finite()) {
        return Err(SimError::InvalidConfig(format!(
            "class_separation = {} must be positive",
            spec.class_separation
        )));
    }
    let centers = blob_centers(spec.n_features, spec.n_classes, spec.class_separation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(spec.n_samples * spec.n_features);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let y = rng.gen_range(0..spec.n_classes);
        for &c in &centers[y] {
            let z: f64 = rng.sample(StandardNormal);
            features.push(c + z);
        }
        labels.push(y);
    }
    Ok(NoisyDataset {
        features,
        n_features: spec.n_features,
        observed_labels: labels.clone(),
        true_labels: labels,
        noise_flags: vec![false; spec.n_samples],
        n_classes: spec.n_classes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// `y -> (y + 1) mod C`.
    Directed,
    /// Uniform over the other `C - 1` classes.
    Symmetric,
}

impl std::str::FromStr for NoiseMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "directed" => Ok(NoiseMode::Directed),
            "symmetric" => Ok(NoiseMode::Symmetric),
            other => Err(SimError::InvalidConfig(format!("unknown noise mode `{other}`"))),
        }
    }
}

/// Corrupts exactly `round(tau * n)` labels, chosen uniformly by `seed`.
pub fn inject_noise(ds: &NoisyDataset, tau: f64, mode: NoiseMode, seed: u64) -> Result<NoisyDataset, SimError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(SimError::InvalidConfig(format!("tau = {tau} not in [0, 1]")));
    }
    if ds.noise_flags.iter().any(|&f| f) {
        return Err(SimError::InvalidConfig("dataset already carries label noise".into()));
    }
    let n = ds.len();
    let n_noisy = (tau * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ds.clone();
    let mut chosen = index::sample(&mut rng, n, n_noisy).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        let y = ds.true_labels[i];
        let noisy = match mode {
            NoiseMode::Directed => (y + 1) % ds.n_classes,
            NoiseMode::Symmetric => {
                let r = rng.gen_range(0..ds.n_classes - 1);
                if r >= y {
                    r + 1
                } else {
                    r
                }
            }
        };
        out.observed_labels[i] = noisy;
        out.noise_flags[i] = true;
    }
    Ok(out)
}
