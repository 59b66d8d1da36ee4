//! Command-line front end: `theory`, `simulate` and `train` subcommands driven
//! by a TOML run configuration whose keys can all be overridden by flags.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::selectors::{SelectError, SelectorKind, ThresholdVariant};
use crate::simkit::{NoiseMode, SimError};
use crate::theory::TheoryError;
pub use config::{OutputFormat, RunConfig, SimulateConfig, TheoryConfig, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } | CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<TheoryError> for CliError {
    fn from(e: TheoryError) -> Self {
        match e {
            TheoryError::Quadrature(_) | TheoryError::EmptyTruncation => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) | SimError::Select(SelectError::InvalidConfig(_) | SelectError::InvalidK(_)) => {
                CliError::Config(e.to_string())
            }
            SimError::Theory(t) => t.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "adaptive-k", version, about = "Adaptive-k sample selection: theory, loss-stream simulation and desk-scale training")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MSE of the selection rules under the two-Gaussian loss model.
    Theory(TheoryArgs),
    /// Run a selector over batches drawn from a known loss mixture.
    Simulate(SimulateArgs),
    /// Train classifiers on noisy synthetic blobs with each selector.
    Train(TrainArgs),
}

macro_rules! apply {
    ($args:expr, $cfg:expr; $($field:ident),* $(,)?) => {
        $( if let Some(v) = $args.$field.clone() { $cfg.$field = v; } )*
    };
}

#[derive(Debug, Args, Default)]
pub struct TheoryArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub sigma1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub mu2_min: Option<f64>,
    #[arg(long)]
    pub mu2_max: Option<f64>,
    #[arg(long)]
    pub mu2_step: Option<f64>,
    #[arg(long)]
    pub sigma2_min: Option<f64>,
    #[arg(long)]
    pub sigma2_max: Option<f64>,
    #[arg(long)]
    pub sigma2_step: Option<f64>,
    /// Noise ratios of the surface sweep, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub taus: Option<Vec<f64>>,
    /// Only print the report at the configured point.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub point_only: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pdf_curves: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    pub pdf_x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub pdf_x_max: Option<f64>,
    #[arg(long)]
    pub pdf_points: Option<usize>,
}

impl TheoryArgs {
    fn apply(&self, c: &mut TheoryConfig) {
        apply!(self, c; mu1, sigma1, mu2, sigma2, tau, n, k, mu2_min, mu2_max, mu2_step,
            sigma2_min, sigma2_max, sigma2_step, taus, point_only, pdf_curves, pdf_x_min,
            pdf_x_max, pdf_points);
    }
}

#[derive(Debug, Args, Default)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub sigma1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub n_batches: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// vanilla, oracle, mkl or adaptive.
    #[arg(long)]
    pub selector: Option<SelectorKind>,
    #[arg(long)]
    pub k: Option<usize>,
    /// paper-exact or bias-corrected-mean.
    #[arg(long)]
    pub threshold_variant: Option<ThresholdVariant>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub summary_window: Option<usize>,
}

impl SimulateArgs {
    fn apply(&self, c: &mut SimulateConfig) {
        apply!(self, c; mu1, sigma1, mu2, sigma2, tau, n_batches, batch_size, selector, k,
            threshold_variant, beta1, beta2, epsilon, summary_window);
    }
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Comma separated list of vanilla, oracle, mkl, adaptive.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub selectors: Option<Vec<SelectorKind>>,
    /// Comma separated noise ratios.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub tau: Option<Vec<f64>>,
    /// Runs per (selector, tau).
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub n_features: Option<usize>,
    #[arg(long)]
    pub n_classes: Option<usize>,
    #[arg(long)]
    pub class_separation: Option<f64>,
    /// directed or symmetric.
    #[arg(long)]
    pub noise_mode: Option<NoiseMode>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub vanilla_epochs: Option<usize>,
    #[arg(long)]
    pub adaptive_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub mkl_k: Option<usize>,
    #[arg(long)]
    pub threshold_variant: Option<ThresholdVariant>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub warm_ema: Option<bool>,
    #[arg(long)]
    pub estimate_window: Option<usize>,
}

impl TrainArgs {
    fn apply(&self, c: &mut TrainConfig) {
        apply!(self, c; selectors, tau, seeds, n_train, n_test, n_features, n_classes,
            class_separation, noise_mode, hidden, vanilla_epochs, adaptive_epochs, batch_size,
            learning_rate, threshold_variant, beta1, beta2, epsilon, warm_ema, estimate_window);
        if let Some(k) = self.mkl_k {
            c.mkl_k = Some(k);
        }
    }
}

impl Cli {
    /// Merges the config file (if any) and the flags into one configuration.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(format) = self.format {
            cfg.format = format;
        }
        match &self.command {
            Command::Theory(a) => a.apply(&mut cfg.theory),
            Command::Simulate(a) => a.apply(&mut cfg.simulate),
            Command::Train(a) => a.apply(&mut cfg.train),
        }
        Ok(cfg)
    }
}

/// Parses `args`, runs the command, and writes the human-readable report to
/// `stdout`. Errors are returned rather than printed.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let cfg = cli.resolve()?;
    let out: &Path = &cfg.out;
    match cli.command {
        Command::Theory(_) => commands::cmd_theory(&cfg.theory, out, stdout),
        Command::Simulate(_) => commands::cmd_simulate(&cfg.simulate, cfg.seed, cfg.format, out, stdout),
        Command::Train(_) => commands::cmd_train(&cfg.train, cfg.seed, cfg.format, out, stdout),
    }
}

/// Full entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
