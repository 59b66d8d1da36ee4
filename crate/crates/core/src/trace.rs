//! Run traces: per-epoch and per-iteration records of a training run or a
//! simulated loss stream, with JSON and flat CSV exports.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::fmt::opt_sig9;
use crate::selectors::SelectorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Vanilla,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub threshold: Option<f64>,
    pub n_selected: usize,
    pub batch_size: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub mean_loss_clean: Option<f64>,
    pub mean_loss_noisy: Option<f64>,
}

impl IterationRecord {
    pub fn selected_fraction(&self) -> f64 {
        self.n_selected as f64 / self.batch_size as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub phase: Phase,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub mean_loss_clean: Option<f64>,
    pub mean_loss_noisy: Option<f64>,
    /// Mean fraction of each mini-batch that was selected ("average k").
    pub avg_selected_fraction: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub undefined_precision: usize,
    pub undefined_recall: usize,
    pub skipped_updates: usize,
    pub iterations: Vec<IterationRecord>,
}

/// Mean clean and noisy training loss at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSnapshot {
    pub mean_loss_clean: Option<f64>,
    pub mean_loss_noisy: Option<f64>,
}

impl LossSnapshot {
    /// Noisy minus clean mean loss, when both groups are present.
    pub fn separation(&self) -> Option<f64> {
        Some(self.mean_loss_noisy? - self.mean_loss_clean?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// `"train"` or `"stream"`.
    pub source: String,
    pub selector: SelectorConfig,
    pub seed: u64,
    /// Echo of the remaining run configuration.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub meta: TraceMeta,
    /// Losses measured right before the first selection epoch.
    pub adaptive_start: Option<LossSnapshot>,
    pub epochs: Vec<EpochRecord>,
}

pub const ITERATION_CSV_HEADER: &str =
    "epoch,iter,threshold,n_selected,batch_size,precision,recall,mean_loss_clean,mean_loss_noisy";

impl RunTrace {
    pub fn adaptive_epochs(&self) -> impl Iterator<Item = &EpochRecord> {
        self.epochs.iter().filter(|e| e.phase == Phase::Adaptive)
    }

    pub fn max_test_accuracy(&self) -> Option<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.test_accuracy)
            .fold(None, |best, a| Some(best.map_or(a, |b: f64| b.max(a))))
    }

    pub fn iterations(&self) -> impl Iterator<Item = &IterationRecord> {
        self.epochs.iter().flat_map(|e| e.iterations.iter())
    }

    pub fn write_json<W: Write>(&self, out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(io::Error::other)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{ITERATION_CSV_HEADER}")?;
        for e in &self.epochs {
            for (i, it) in e.iterations.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    e.epoch,
                    i + 1,
                    opt_sig9(it.threshold),
                    it.n_selected,
                    it.batch_size,
                    opt_sig9(it.precision),
                    opt_sig9(it.recall),
                    opt_sig9(it.mean_loss_clean),
                    opt_sig9(it.mean_loss_noisy),
                )?;
            }
        }
        Ok(())
    }
}

/// Mean of the defined entries, or `None` if there are none.
pub(crate) fn mean_defined<I: IntoIterator<Item = Option<f64>>>(values: I) -> Option<f64> {
    let (sum, count) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}
