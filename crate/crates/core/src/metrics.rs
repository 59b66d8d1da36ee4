//! Selection quality (precision and recall against the noise flags) and the
//! noise-ratio estimate read off the average selected fraction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{mean_defined, IterationRecord, RunTrace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("mask length {mask} does not match noise flag length {flags}")]
    LengthMismatch { mask: usize, flags: usize },
    #[error("empty mini-batch")]
    Empty,
    #[error("need {window} adaptive-phase epochs, trace has {available}")]
    InsufficientEpochs { window: usize, available: usize },
    #[error("estimation window must be positive")]
    ZeroWindow,
}

/// Precision is absent when nothing was selected; recall is absent when the
/// batch holds no clean samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub selected_fraction: f64,
    pub clean_fraction_in_batch: f64,
}

pub fn selection_metrics(mask: &[bool], noise_flags: &[bool]) -> Result<SelectionMetrics, MetricsError> {
    if mask.len() != noise_flags.len() {
        return Err(MetricsError::LengthMismatch { mask: mask.len(), flags: noise_flags.len() });
    }
    if mask.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = mask.len() as f64;
    let selected = mask.iter().filter(|&&m| m).count();
    let clean = noise_flags.iter().filter(|&&f| !f).count();
    let selected_clean = mask.iter().zip(noise_flags).filter(|(&m, &f)| m && !f).count();
    Ok(SelectionMetrics {
        precision: (selected > 0).then(|| selected_clean as f64 / selected as f64),
        recall: (clean > 0).then(|| selected_clean as f64 / clean as f64),
        selected_fraction: selected as f64 / n,
        clean_fraction_in_batch: clean as f64 / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochAverage {
    pub metrics: SelectionMetrics,
    pub undefined_precision: usize,
    pub undefined_recall: usize,
}

/// Averages per-iteration metrics. Undefined precision or recall entries are
/// left out of their mean and counted instead.
pub fn epoch_average(records: &[SelectionMetrics]) -> Result<EpochAverage, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = records.len() as f64;
    Ok(EpochAverage {
        metrics: SelectionMetrics {
            precision: mean_defined(records.iter().map(|r| r.precision)),
            recall: mean_defined(records.iter().map(|r| r.recall)),
            selected_fraction: records.iter().map(|r| r.selected_fraction).sum::<f64>() / n,
            clean_fraction_in_batch: records.iter().map(|r| r.clean_fraction_in_batch).sum::<f64>() / n,
        },
        undefined_precision: records.iter().filter(|r| r.precision.is_none()).count(),
        undefined_recall: records.iter().filter(|r| r.recall.is_none()).count(),
    })
}

pub const DEFAULT_ESTIMATION_WINDOW: usize = 10;

/// Estimated noise ratio: one minus the mean selected fraction over the last
/// `window` adaptive-phase epochs.
pub fn estimate_noise_ratio(trace: &RunTrace, window: usize) -> Result<f64, MetricsError> {
    if window == 0 {
        return Err(MetricsError::ZeroWindow);
    }
    let fractions: Vec<f64> = trace.adaptive_epochs().map(|e| e.avg_selected_fraction).collect();
    if fractions.len() < window {
        return Err(MetricsError::InsufficientEpochs { window, available: fractions.len() });
    }
    let tail = &fractions[fractions.len() - window..];
    let kept = tail.iter().sum::<f64>() / window as f64;
    Ok((1.0 - kept).clamp(0.0, 1.0))
}

/// Long-run averages over a run of iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamSummary {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub selected_fraction: f64,
    pub mean_threshold: Option<f64>,
    pub iterations: usize,
}

pub fn summarize_iterations(iterations: &[IterationRecord]) -> StreamSummary {
    let n = iterations.len().max(1) as f64;
    StreamSummary {
        precision: mean_defined(iterations.iter().map(|i| i.precision)),
        recall: mean_defined(iterations.iter().map(|i| i.recall)),
        selected_fraction: iterations.iter().map(IterationRecord::selected_fraction).sum::<f64>() / n,
        mean_threshold: mean_defined(iterations.iter().map(|i| i.threshold)),
        iterations: iterations.len(),
    }
}
