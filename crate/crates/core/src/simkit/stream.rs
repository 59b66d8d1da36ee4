//! Model-free check of a selector: batches of losses are drawn directly from a
//! known clean/noisy mixture and the selector's choices are scored.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::metrics::{epoch_average, selection_metrics};
use crate::selectors::{Selector, SelectorConfig};
use crate::theory::GaussianMixture;
use crate::trace::{mean_defined, EpochRecord, IterationRecord, Phase, RunTrace, TraceMeta};

/// Runs `n_batches` batches through the selector. All batches land in a single
/// epoch record of the returned trace.
///
/// Mixture draws can be negative. The `PaperExact` threshold rejects a negative
/// batch mean, so use `BiasCorrectedMean` unless `gm` sits well above zero.
pub fn simulate_stream(
    gm: &GaussianMixture,
    n_batches: usize,
    batch_size: usize,
    selector_config: &SelectorConfig,
    seed: u64,
) -> Result<RunTrace, SimError> {
    gm.validate()?;
    if n_batches == 0 || batch_size == 0 {
        return Err(SimError::InvalidConfig("n_batches and batch_size must be positive".into()));
    }
    selector_config.validate(Some(batch_size))?;
    let mut selector = Selector::new(*selector_config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut iterations = Vec::with_capacity(n_batches);
    let mut metrics = Vec::with_capacity(n_batches);
    let mut losses = vec![0.0; batch_size];
    let mut flags = vec![false; batch_size];
    for _ in 0..n_batches {
        for (l, f) in losses.iter_mut().zip(flags.iter_mut()) {
            (*l, *f) = gm.sample(&mut rng);
        }
        let selection = selector.select(&losses, &flags)?;
        let m = selection_metrics(&selection.selected, &flags)?;
        let group = |noisy: bool| mean_defined(losses.iter().zip(&flags).map(|(&l, &f)| (f == noisy).then_some(l)));
        iterations.push(IterationRecord {
            threshold: selection.threshold,
            n_selected: selection.n_selected,
            batch_size,
            precision: m.precision,
            recall: m.recall,
            mean_loss_clean: group(false),
            mean_loss_noisy: group(true),
        });
        metrics.push(m);
    }

    let avg = epoch_average(&metrics)?;
    let epoch = EpochRecord {
        epoch: 1,
        phase: Phase::Adaptive,
        train_accuracy: None,
        test_accuracy: None,
        mean_loss_clean: mean_defined(iterations.iter().map(|i| i.mean_loss_clean)),
        mean_loss_noisy: mean_defined(iterations.iter().map(|i| i.mean_loss_noisy)),
        avg_selected_fraction: avg.metrics.selected_fraction,
        precision: avg.metrics.precision,
        recall: avg.metrics.recall,
        undefined_precision: avg.undefined_precision,
        undefined_recall: avg.undefined_recall,
        skipped_updates: iterations.iter().filter(|i| i.n_selected == 0).count(),
        iterations,
    };
    Ok(RunTrace {
        meta: TraceMeta {
            source: "stream".into(),
            selector: *selector_config,
            seed,
            config: serde_json::json!({
                "mixture": gm,
                "n_batches": n_batches,
                "batch_size": batch_size,
            }),
        },
        adaptive_start: None,
        epochs: vec![epoch],
    })
}
