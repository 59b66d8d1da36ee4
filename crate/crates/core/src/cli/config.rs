//! Run configuration: a TOML file with one table per subcommand, every key of
//! which can be overridden by a command-line flag of the same name.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::selectors::{
    SelectorConfig, SelectorKind, ThresholdVariant, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON,
};
use crate::simkit::NoiseMode;
use crate::theory::GaussianMixture;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub format: OutputFormat,
    pub theory: TheoryConfig,
    pub simulate: SimulateConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            seed: 0,
            format: OutputFormat::default(),
            theory: TheoryConfig::default(),
            simulate: SimulateConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Mixture point, sweep axes, and curve sampling for `theory`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TheoryConfig {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub tau: f64,
    pub n: usize,
    pub k: usize,
    pub mu2_min: f64,
    pub mu2_max: f64,
    pub mu2_step: f64,
    pub sigma2_min: f64,
    pub sigma2_max: f64,
    pub sigma2_step: f64,
    pub taus: Vec<f64>,
    pub point_only: bool,
    pub pdf_curves: bool,
    pub pdf_x_min: f64,
    pub pdf_x_max: f64,
    pub pdf_points: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            mu1: 0.0,
            sigma1: 1.0,
            mu2: 5.0,
            sigma2: 2.0,
            tau: 0.4,
            n: 10,
            k: 6,
            mu2_min: 0.0,
            mu2_max: 8.0,
            mu2_step: 0.1,
            sigma2_min: 0.25,
            sigma2_max: 4.0,
            sigma2_step: 0.125,
            taus: vec![0.1, 0.2, 0.3, 0.4],
            point_only: false,
            pdf_curves: true,
            pdf_x_min: -5.0,
            pdf_x_max: 15.0,
            pdf_points: 401,
        }
    }
}

impl TheoryConfig {
    pub fn mixture(&self) -> Result<GaussianMixture, CliError> {
        GaussianMixture::new(self.mu1, self.sigma1, self.mu2, self.sigma2, self.tau)
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateConfig {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub tau: f64,
    pub n_batches: usize,
    pub batch_size: usize,
    pub selector: SelectorKind,
    pub k: usize,
    pub threshold_variant: ThresholdVariant,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Number of trailing batches the printed summary averages over.
    pub summary_window: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            mu1: 0.0,
            sigma1: 1.0,
            mu2: 5.0,
            sigma2: 2.0,
            tau: 0.4,
            n_batches: 10_000,
            batch_size: 10,
            selector: SelectorKind::AdaptiveK,
            k: 6,
            threshold_variant: ThresholdVariant::BiasCorrectedMean,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            summary_window: 5_000,
        }
    }
}

impl SimulateConfig {
    pub fn mixture(&self) -> Result<GaussianMixture, CliError> {
        GaussianMixture::new(self.mu1, self.sigma1, self.mu2, self.sigma2, self.tau)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn selector_config(&self) -> SelectorConfig {
        SelectorConfig {
            kind: self.selector,
            k: self.k,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            threshold_variant: self.threshold_variant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainConfig {
    pub selectors: Vec<SelectorKind>,
    pub tau: Vec<f64>,
    /// Number of runs per (selector, tau); run `i` uses seed `seed + i`.
    pub seeds: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub class_separation: f64,
    pub noise_mode: NoiseMode,
    pub hidden: usize,
    pub vanilla_epochs: usize,
    pub adaptive_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// MKL keep count; unset means `round((1 - tau) * batch_size)`.
    pub mkl_k: Option<usize>,
    pub threshold_variant: ThresholdVariant,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub warm_ema: bool,
    pub estimate_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            selectors: vec![SelectorKind::Oracle, SelectorKind::Vanilla, SelectorKind::Mkl, SelectorKind::AdaptiveK],
            tau: vec![0.4],
            seeds: 3,
            n_train: 5000,
            n_test: 2000,
            n_features: 8,
            n_classes: 4,
            class_separation: 4.0,
            noise_mode: NoiseMode::Directed,
            hidden: 64,
            vanilla_epochs: 10,
            adaptive_epochs: 20,
            batch_size: 32,
            learning_rate: 0.05,
            mkl_k: None,
            threshold_variant: ThresholdVariant::PaperExact,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            warm_ema: false,
            estimate_window: crate::metrics::DEFAULT_ESTIMATION_WINDOW,
        }
    }
}

impl TrainConfig {
    pub fn selector_config(&self, kind: SelectorKind, tau: f64) -> SelectorConfig {
        let k = self
            .mkl_k
            .unwrap_or_else(|| (((1.0 - tau) * self.batch_size as f64).round() as usize).max(1));
        SelectorConfig {
            kind,
            k,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            threshold_variant: self.threshold_variant,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            r#"
            out = "results"
            format = "both"
            [theory]
            tau = 0.3
            point-only = true
            [simulate]
            selector = "mkl"
            threshold-variant = "paper-exact"
            [train]
            selectors = ["oracle", "adaptive"]
            tau = [0.0, 0.2]
            noise-mode = "symmetric"
            mkl-k = 20
            "#,
        )
        .unwrap();
        assert_eq!(cfg.out, PathBuf::from("results"));
        assert_eq!(cfg.format, OutputFormat::Both);
        assert_eq!(cfg.theory.tau, 0.3);
        assert!(cfg.theory.point_only);
        assert_eq!(cfg.simulate.selector, SelectorKind::Mkl);
        assert_eq!(cfg.train.selectors, vec![SelectorKind::Oracle, SelectorKind::AdaptiveK]);
        assert_eq!(cfg.train.noise_mode, NoiseMode::Symmetric);
        assert_eq!(cfg.train.mkl_k, Some(20));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_toml("[train]\nlearning-rat = 0.1\n").unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("learning-rat")), "{err}");
        let err = RunConfig::from_toml("bogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn mkl_k_follows_tau() {
        let t = TrainConfig::default();
        assert_eq!(t.selector_config(SelectorKind::Mkl, 0.4).k, 19);
        assert_eq!(t.selector_config(SelectorKind::Mkl, 0.0).k, 32);
        assert_eq!(t.selector_config(SelectorKind::Mkl, 1.0).k, 1);
    }
}
