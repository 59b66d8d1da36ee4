//! Two-phase training loop: vanilla epochs on every sample, then epochs where
//! the configured selector decides which samples reach the update.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::NoisyDataset;
use super::mlp::{MlpModel, ModelConfig};
use super::SimError;
use crate::metrics::{epoch_average, selection_metrics, SelectionMetrics};
use crate::selectors::{select_vanilla, BatchSelection, Selector, SelectorConfig, SelectorKind};
use crate::trace::{mean_defined, EpochRecord, IterationRecord, LossSnapshot, Phase, RunTrace, TraceMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    pub vanilla_epochs: usize,
    pub adaptive_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Let the Adaptive-k moving averages accumulate during the vanilla phase
    /// instead of starting fresh when selection begins.
    pub warm_ema: bool,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            vanilla_epochs: 10,
            adaptive_epochs: 20,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
            warm_ema: false,
        }
    }
}

impl TrainSchedule {
    pub fn total_epochs(&self) -> usize {
        self.vanilla_epochs + self.adaptive_epochs
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.batch_size == 0 {
            return Err(SimError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "learning_rate = {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

// rng streams: 0 initializes the model, 1 + epoch shuffles that epoch
const INIT_STREAM: u64 = 0;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn all_rows(ds: &NoisyDataset) -> Vec<&[f64]> {
    (0..ds.len()).map(|i| ds.row(i)).collect()
}

struct Evaluation {
    accuracy: f64,
    snapshot: LossSnapshot,
}

/// Accuracy against `labels` and mean loss of clean and noisy samples
/// (losses use the observed labels).
fn evaluate(model: &MlpModel, ds: &NoisyDataset, labels: &[usize]) -> Evaluation {
    let rows = all_rows(ds);
    let fwd = model.forward(&rows);
    let preds = fwd.predictions();
    let correct = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    let losses = fwd.losses(&ds.observed_labels);
    Evaluation {
        accuracy: correct as f64 / ds.len().max(1) as f64,
        snapshot: group_means(&losses, &ds.noise_flags),
    }
}

fn group_means(losses: &[f64], noise_flags: &[bool]) -> LossSnapshot {
    let pick = |noisy: bool| {
        mean_defined(losses.iter().zip(noise_flags).map(|(&l, &f)| (f == noisy).then_some(l)))
    };
    LossSnapshot { mean_loss_clean: pick(false), mean_loss_noisy: pick(true) }
}

fn check_dataset(ds: &NoisyDataset, what: &str) -> Result<(), SimError> {
    let n = ds.len();
    if n == 0 {
        return Err(SimError::InvalidConfig(format!("{what} set is empty")));
    }
    if ds.features.len() != n * ds.n_features
        || ds.true_labels.len() != n
        || ds.noise_flags.len() != n
        || ds.observed_labels.iter().chain(&ds.true_labels).any(|&y| y >= ds.n_classes)
    {
        return Err(SimError::InvalidConfig(format!("{what} set is inconsistent")));
    }
    Ok(())
}

/// Trains a fresh classifier on `train` and reports per-epoch accuracy on
/// `test` (scored against its true labels) plus selection statistics.
pub fn train(
    train: &NoisyDataset,
    model_config: &ModelConfig,
    schedule: &TrainSchedule,
    selector_config: &SelectorConfig,
    test: &NoisyDataset,
) -> Result<RunTrace, SimError> {
    schedule.validate()?;
    selector_config.validate(Some(schedule.batch_size))?;
    check_dataset(train, "training")?;
    check_dataset(test, "test")?;
    if test.n_features != train.n_features || test.n_classes != train.n_classes {
        return Err(SimError::InvalidConfig("train and test shapes differ".into()));
    }
    if model_config.hidden == 0 {
        return Err(SimError::InvalidConfig("hidden width must be positive".into()));
    }

    let mut model = MlpModel::new(
        train.n_features,
        model_config.hidden,
        train.n_classes,
        &mut stream_rng(schedule.seed, INIT_STREAM),
    );
    let mut selector = Selector::new(*selector_config)?;
    let warm = schedule.warm_ema && selector_config.kind == SelectorKind::AdaptiveK;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(schedule.total_epochs());
    let mut adaptive_start = None;

    for epoch in 0..schedule.total_epochs() {
        let phase = if epoch < schedule.vanilla_epochs { Phase::Vanilla } else { Phase::Adaptive };
        if epoch == schedule.vanilla_epochs {
            adaptive_start = Some(evaluate(&model, train, &train.observed_labels).snapshot);
            if !warm {
                selector.reset();
            }
        }
        order.shuffle(&mut stream_rng(schedule.seed, 1 + epoch as u64));

        let mut iterations = Vec::with_capacity(train.len().div_ceil(schedule.batch_size));
        let mut batch_metrics: Vec<SelectionMetrics> = Vec::with_capacity(iterations.capacity());
        let mut skipped = 0;
        for (iter, chunk) in order.chunks(schedule.batch_size).enumerate() {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| train.row(i)).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train.observed_labels[i]).collect();
            let flags: Vec<bool> = chunk.iter().map(|&i| train.noise_flags[i]).collect();

            let fwd = model.forward(&rows);
            let losses = fwd.losses(&labels);
            if losses.iter().any(|l| !l.is_finite()) {
                return Err(SimError::Divergence { epoch: epoch + 1, iteration: iter + 1 });
            }

            let selection: BatchSelection = match phase {
                Phase::Vanilla => {
                    let mut s = select_vanilla(&losses)?;
                    if warm {
                        s.threshold = Some(selector.observe(&losses)?);
                    }
                    s
                }
                Phase::Adaptive => selector.select(&losses, &flags)?,
            };

            let m = selection_metrics(&selection.selected, &flags)?;
            let groups = group_means(&losses, &flags);
            iterations.push(IterationRecord {
                threshold: selection.threshold,
                n_selected: selection.n_selected,
                batch_size: chunk.len(),
                precision: m.precision,
                recall: m.recall,
                mean_loss_clean: groups.mean_loss_clean,
                mean_loss_noisy: groups.mean_loss_noisy,
            });
            batch_metrics.push(m);

            match model.backward(&fwd, &rows, &labels, &selection.selected) {
                Some(g) => model.apply_sgd(&g, schedule.learning_rate),
                None => skipped += 1,
            }
        }
        if !model.all_finite() {
            return Err(SimError::Divergence { epoch: epoch + 1, iteration: iterations.len() });
        }

        let avg = epoch_average(&batch_metrics)?;
        let train_eval = evaluate(&model, train, &train.observed_labels);
        let test_eval = evaluate(&model, test, &test.true_labels);
        epochs.push(EpochRecord {
            epoch: epoch + 1,
            phase,
            train_accuracy: Some(train_eval.accuracy),
            test_accuracy: Some(test_eval.accuracy),
            mean_loss_clean: train_eval.snapshot.mean_loss_clean,
            mean_loss_noisy: train_eval.snapshot.mean_loss_noisy,
            avg_selected_fraction: avg.metrics.selected_fraction,
            precision: avg.metrics.precision,
            recall: avg.metrics.recall,
            undefined_precision: avg.undefined_precision,
            undefined_recall: avg.undefined_recall,
            skipped_updates: skipped,
            iterations,
        });
    }

    Ok(RunTrace {
        meta: TraceMeta {
            source: "train".into(),
            selector: *selector_config,
            seed: schedule.seed,
            config: serde_json::json!({
                "schedule": schedule,
                "model": model_config,
                "n_train": train.len(),
                "n_test": test.len(),
                "n_features": train.n_features,
                "n_classes": train.n_classes,
                "train_noise_ratio": train.noise_ratio(),
            }),
        },
        adaptive_start,
        epochs,
    })
}
