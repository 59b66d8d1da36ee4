//! Mini-batch sample selection rules.
//!
//! Each rule maps a vector of per-sample losses to a hard boolean mask over the
//! batch. `Vanilla` keeps everything, `Mkl` keeps the `k` smallest losses,
//! `Oracle` keeps exactly the clean samples, and `AdaptiveK` keeps samples whose
//! loss does not exceed a threshold tracked by exponential moving averages of
//! the batch mean loss.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("empty mini-batch")]
    EmptyBatch,
    #[error("non-finite loss at index {0}")]
    NonFiniteLoss(usize),
    #[error("invalid k: {0}")]
    InvalidK(usize),
    #[error("negative mean loss: {0}")]
    NegativeMeanLoss(f64),
    #[error("non-finite mean loss")]
    NonFiniteMeanLoss,
    #[error("invalid selector config: {0}")]
    InvalidConfig(String),
    #[error("noise flags length {flags} does not match batch size {batch}")]
    FlagLengthMismatch { flags: usize, batch: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    Vanilla,
    Oracle,
    Mkl,
    #[serde(rename = "adaptive")]
    AdaptiveK,
}

impl SelectorKind {
    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::Vanilla => "vanilla",
            SelectorKind::Oracle => "oracle",
            SelectorKind::Mkl => "mkl",
            SelectorKind::AdaptiveK => "adaptive",
        }
    }
}

impl std::fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SelectorKind {
    type Err = SelectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vanilla" | "sgd" => Ok(SelectorKind::Vanilla),
            "oracle" => Ok(SelectorKind::Oracle),
            "mkl" => Ok(SelectorKind::Mkl),
            "adaptive" | "adaptive-k" | "adaptivek" => Ok(SelectorKind::AdaptiveK),
            other => Err(SelectError::InvalidConfig(format!("unknown selector `{other}`"))),
        }
    }
}

/// How the Adaptive-k threshold is derived from the moving-average state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdVariant {
    /// `m / (sqrt(v) + eps)`, the normalized ratio of the two moment estimates.
    PaperExact,
    /// `m / (1 - beta1^step)`, the bias-corrected running mean of batch losses.
    BiasCorrectedMean,
}

impl std::str::FromStr for ThresholdVariant {
    type Err = SelectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper-exact" | "paper_exact" | "exact" => Ok(ThresholdVariant::PaperExact),
            "bias-corrected-mean" | "bias_corrected_mean" | "mean" => {
                Ok(ThresholdVariant::BiasCorrectedMean)
            }
            other => Err(SelectError::InvalidConfig(format!(
                "unknown threshold variant `{other}`"
            ))),
        }
    }
}

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub kind: SelectorKind,
    /// Number of smallest-loss samples kept; only meaningful for `Mkl`.
    pub k: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub threshold_variant: ThresholdVariant,
}

impl SelectorConfig {
    fn with_kind(kind: SelectorKind) -> Self {
        Self {
            kind,
            k: 1,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            threshold_variant: ThresholdVariant::PaperExact,
        }
    }

    pub fn vanilla() -> Self {
        Self::with_kind(SelectorKind::Vanilla)
    }

    pub fn oracle() -> Self {
        Self::with_kind(SelectorKind::Oracle)
    }

    pub fn mkl(k: usize) -> Self {
        Self { k, ..Self::with_kind(SelectorKind::Mkl) }
    }

    pub fn adaptive(variant: ThresholdVariant) -> Self {
        Self { threshold_variant: variant, ..Self::with_kind(SelectorKind::AdaptiveK) }
    }

    /// Checks the decay rates and stabilizer, and for MKL that `1 <= k <= batch_size`
    /// when a batch size is supplied.
    pub fn validate(&self, batch_size: Option<usize>) -> Result<(), SelectError> {
        if !(self.beta1 > 0.0 && self.beta1 <= 1.0) {
            return Err(SelectError::InvalidConfig(format!("beta1 {} not in (0, 1]", self.beta1)));
        }
        if !(self.beta2 > 0.0 && self.beta2 <= 1.0) {
            return Err(SelectError::InvalidConfig(format!("beta2 {} not in (0, 1]", self.beta2)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(SelectError::InvalidConfig(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.kind == SelectorKind::Mkl {
            if self.k == 0 {
                return Err(SelectError::InvalidK(self.k));
            }
            if let Some(n) = batch_size {
                if self.k > n {
                    return Err(SelectError::InvalidConfig(format!(
                        "k = {} exceeds mini-batch size {n}",
                        self.k
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Moving-average state behind the Adaptive-k threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub m: f64,
    pub v: f64,
    pub step: u64,
}

impl ThresholdState {
    pub fn new() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSelection {
    pub selected: Vec<bool>,
    pub threshold: Option<f64>,
    pub n_selected: usize,
}

impl BatchSelection {
    fn from_mask(selected: Vec<bool>, threshold: Option<f64>) -> Self {
        let n_selected = selected.iter().filter(|&&s| s).count();
        Self { selected, threshold, n_selected }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Indices of the selected samples, in batch order.
    pub fn indices(&self) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }
}

fn check_losses(losses: &[f64]) -> Result<(), SelectError> {
    if losses.is_empty() {
        return Err(SelectError::EmptyBatch);
    }
    match losses.iter().position(|l| !l.is_finite()) {
        Some(i) => Err(SelectError::NonFiniteLoss(i)),
        None => Ok(()),
    }
}

pub fn select_vanilla(losses: &[f64]) -> Result<BatchSelection, SelectError> {
    check_losses(losses)?;
    Ok(BatchSelection::from_mask(vec![true; losses.len()], None))
}

/// Keeps the `min(k, n)` smallest losses. Ties go to the lower index.
pub fn select_mkl(losses: &[f64], k: usize) -> Result<BatchSelection, SelectError> {
    if k == 0 {
        return Err(SelectError::InvalidK(k));
    }
    check_losses(losses)?;
    let mut order: Vec<usize> = (0..losses.len()).collect();
    // stable: equal losses keep index order
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]));
    let mut mask = vec![false; losses.len()];
    for &i in order.iter().take(k) {
        mask[i] = true;
    }
    Ok(BatchSelection::from_mask(mask, None))
}

pub fn select_oracle(noise_flags: &[bool]) -> Result<BatchSelection, SelectError> {
    if noise_flags.is_empty() {
        return Err(SelectError::EmptyBatch);
    }
    Ok(BatchSelection::from_mask(noise_flags.iter().map(|&noisy| !noisy).collect(), None))
}

/// Folds one batch mean loss into the moving averages and returns the new
/// state together with the resulting threshold.
///
/// The `PaperExact` ratio is only meaningful for non-negative losses and
/// rejects a negative mean. `BiasCorrectedMean` is a plain running mean and
/// accepts any finite value.
pub fn update_threshold(
    state: ThresholdState,
    batch_mean_loss: f64,
    config: &SelectorConfig,
) -> Result<(ThresholdState, f64), SelectError> {
    if !batch_mean_loss.is_finite() {
        return Err(SelectError::NonFiniteMeanLoss);
    }
    if batch_mean_loss < 0.0 && config.threshold_variant == ThresholdVariant::PaperExact {
        return Err(SelectError::NegativeMeanLoss(batch_mean_loss));
    }
    let m = config.beta1 * state.m + (1.0 - config.beta1) * batch_mean_loss;
    let v = config.beta2 * state.v + (1.0 - config.beta2) * batch_mean_loss * batch_mean_loss;
    let step = state.step + 1;
    let threshold = match config.threshold_variant {
        ThresholdVariant::PaperExact => m / (v.sqrt() + config.epsilon),
        ThresholdVariant::BiasCorrectedMean => {
            let correction = 1.0 - config.beta1.powf(step as f64);
            // beta1 == 1 never moves m off zero; fall back to the raw average
            if correction > 0.0 {
                m / correction
            } else {
                m
            }
        }
    };
    Ok((ThresholdState { m, v, step }, threshold))
}

/// Updates the threshold with this batch's mean loss, then keeps every sample
/// whose loss is at or below the threshold.
pub fn select_adaptive(
    losses: &[f64],
    state: ThresholdState,
    config: &SelectorConfig,
) -> Result<(BatchSelection, ThresholdState), SelectError> {
    check_losses(losses)?;
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    let (next, threshold) = update_threshold(state, mean, config)?;
    let mask = losses.iter().map(|&l| l <= threshold).collect();
    Ok((BatchSelection::from_mask(mask, Some(threshold)), next))
}

/// A configured selection rule together with its running threshold state.
#[derive(Debug, Clone)]
pub struct Selector {
    config: SelectorConfig,
    state: ThresholdState,
}

impl Selector {
    pub fn new(config: SelectorConfig) -> Result<Self, SelectError> {
        config.validate(None)?;
        Ok(Self { config, state: ThresholdState::new() })
    }

    pub fn config(&self) -> &SelectorConfig {
        &self.config
    }

    pub fn state(&self) -> ThresholdState {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = ThresholdState::new();
    }

    /// Feeds a batch mean into the threshold state without selecting anything.
    /// Used to warm the moving averages during a vanilla phase.
    pub fn observe(&mut self, losses: &[f64]) -> Result<f64, SelectError> {
        check_losses(losses)?;
        let mean = losses.iter().sum::<f64>() / losses.len() as f64;
        let (next, threshold) = update_threshold(self.state, mean, &self.config)?;
        self.state = next;
        Ok(threshold)
    }

    /// `noise_flags` is only consulted by the oracle rule.
    pub fn select(&mut self, losses: &[f64], noise_flags: &[bool]) -> Result<BatchSelection, SelectError> {
        match self.config.kind {
            SelectorKind::Vanilla => select_vanilla(losses),
            SelectorKind::Mkl => select_mkl(losses, self.config.k),
            SelectorKind::Oracle => {
                check_losses(losses)?;
                if noise_flags.len() != losses.len() {
                    return Err(SelectError::FlagLengthMismatch {
                        flags: noise_flags.len(),
                        batch: losses.len(),
                    });
                }
                select_oracle(noise_flags)
            }
            SelectorKind::AdaptiveK => {
                let (selection, next) = select_adaptive(losses, self.state, &self.config)?;
                self.state = next;
                Ok(selection)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(sel: &BatchSelection) -> Vec<bool> {
        sel.selected.clone()
    }

    #[test]
    fn vanilla_selects_everything() {
        let s = select_vanilla(&[0.3, 9.1, 0.2]).unwrap();
        assert_eq!(mask(&s), vec![true, true, true]);
        assert_eq!(s.threshold, None);
        assert_eq!(select_vanilla(&[5.0]).unwrap().n_selected, 1);
        assert_eq!(select_vanilla(&[1.0; 17]).unwrap().n_selected, 17);
    }

    #[test]
    fn vanilla_rejects_bad_input() {
        assert_eq!(select_vanilla(&[]), Err(SelectError::EmptyBatch));
        assert_eq!(select_vanilla(&[1.0, f64::NAN]), Err(SelectError::NonFiniteLoss(1)));
        assert_eq!(select_vanilla(&[f64::INFINITY]), Err(SelectError::NonFiniteLoss(0)));
        assert_eq!(SelectError::EmptyBatch.to_string(), "empty mini-batch");
        assert!(SelectError::NonFiniteLoss(0).to_string().starts_with("non-finite loss"));
    }

    #[test]
    fn mkl_keeps_smallest() {
        assert_eq!(mask(&select_mkl(&[0.1, 5.0, 0.2], 2).unwrap()), vec![true, false, true]);
    }

    #[test]
    fn mkl_ties_go_to_lower_index() {
        assert_eq!(mask(&select_mkl(&[1.0, 1.0, 2.0], 1).unwrap()), vec![true, false, false]);
        assert_eq!(mask(&select_mkl(&[3.0, 1.0, 1.0, 1.0], 2).unwrap()), vec![false, true, true, false]);
    }

    #[test]
    fn mkl_k_larger_than_batch() {
        let s = select_mkl(&[2.0, 1.0], 5).unwrap();
        assert_eq!(s.n_selected, 2);
    }

    #[test]
    fn mkl_invalid_k() {
        assert_eq!(select_mkl(&[1.0], 0), Err(SelectError::InvalidK(0)));
        assert!(SelectError::InvalidK(0).to_string().starts_with("invalid k"));
    }

    #[test]
    fn oracle_is_complement_of_flags() {
        assert_eq!(mask(&select_oracle(&[false, true, false]).unwrap()), vec![true, false, true]);
        let all_noisy = select_oracle(&[true, true]).unwrap();
        assert_eq!(mask(&all_noisy), vec![false, false]);
        assert_eq!(all_noisy.n_selected, 0);
        assert_eq!(select_oracle(&[false; 8]).unwrap().n_selected, 8);
        assert_eq!(select_oracle(&[]), Err(SelectError::EmptyBatch));
    }

    #[test]
    fn paper_exact_first_step() {
        let cfg = SelectorConfig::adaptive(ThresholdVariant::PaperExact);
        let (st, thr) = update_threshold(ThresholdState::new(), 1.0, &cfg).unwrap();
        assert!((st.m - 0.1).abs() < 1e-15);
        assert!((st.v - 0.001).abs() < 1e-15);
        assert_eq!(st.step, 1);
        // 0.1 / (sqrt(0.001) + 1e-8)
        assert!((thr - 3.162_277_66).abs() < 1e-5, "{thr}");
    }

    #[test]
    fn paper_exact_steady_state_is_near_one() {
        let cfg = SelectorConfig::adaptive(ThresholdVariant::PaperExact);
        let mut st = ThresholdState::new();
        let mut thr = 0.0;
        for _ in 0..10_000 {
            let (next, t) = update_threshold(st, 2.0, &cfg).unwrap();
            st = next;
            thr = t;
        }
        assert!((thr - 1.0).abs() < 1e-3, "{thr}");
        assert_eq!(st.step, 10_000);
    }

    #[test]
    fn bias_corrected_first_step_recovers_sample() {
        let cfg = SelectorConfig::adaptive(ThresholdVariant::BiasCorrectedMean);
        let (st, thr) = update_threshold(ThresholdState::new(), 1.0, &cfg).unwrap();
        assert!((st.m - 0.1).abs() < 1e-15);
        assert!((thr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_mean_loss_rejected() {
        let cfg = SelectorConfig::adaptive(ThresholdVariant::PaperExact);
        assert_eq!(
            update_threshold(ThresholdState::new(), -0.5, &cfg),
            Err(SelectError::NegativeMeanLoss(-0.5))
        );
        assert!(SelectError::NegativeMeanLoss(-0.5).to_string().starts_with("negative mean loss"));
        assert!(update_threshold(ThresholdState::new(), f64::NAN, &cfg).is_err());
    }

    #[test]
    fn running_mean_accepts_signed_losses() {
        let cfg = SelectorConfig::adaptive(ThresholdVariant::BiasCorrectedMean);
        let (st, thr) = update_threshold(ThresholdState::new(), -0.5, &cfg).unwrap();
        assert!((thr + 0.5).abs() < 1e-12);
        let (_, thr) = update_threshold(st, 1.5, &cfg).unwrap();
        // (0.9 * -0.05 + 0.15) / (1 - 0.81)
        assert!((thr - 0.105 / 0.19).abs() < 1e-12);
    }

    #[test]
    fn adaptive_first_step_selects_both() {
        let cfg = SelectorConfig::adaptive(ThresholdVariant::PaperExact);
        let (sel, st) = select_adaptive(&[0.5, 0.5], ThresholdState::new(), &cfg).unwrap();
        assert_eq!(mask(&sel), vec![true, true]);
        // m = 0.05, v = 0.00025, thr = 0.05 / (0.0158114 + 1e-8)
        assert!((sel.threshold.unwrap() - 3.162_26).abs() < 1e-4);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn adaptive_rejects_constant_large_losses_after_convergence() {
        let cfg = SelectorConfig::adaptive(ThresholdVariant::PaperExact);
        let mut st = ThresholdState::new();
        let mut last = None;
        for _ in 0..10_000 {
            let (sel, next) = select_adaptive(&[2.0, 2.0, 2.0], st, &cfg).unwrap();
            st = next;
            last = Some(sel);
        }
        assert_eq!(last.unwrap().selected, vec![false, false, false]);
    }

    #[test]
    fn adaptive_threshold_is_inclusive() {
        let cfg = SelectorConfig::adaptive(ThresholdVariant::BiasCorrectedMean);
        // first step threshold equals the batch mean exactly
        let (sel, _) = select_adaptive(&[1.0, 1.0], ThresholdState::new(), &cfg).unwrap();
        assert_eq!(sel.n_selected, 2);
    }

    #[test]
    fn config_validation() {
        assert!(SelectorConfig::mkl(0).validate(None).is_err());
        assert!(SelectorConfig::mkl(11).validate(Some(10)).is_err());
        assert!(SelectorConfig::mkl(10).validate(Some(10)).is_ok());
        let mut cfg = SelectorConfig::adaptive(ThresholdVariant::PaperExact);
        cfg.beta1 = 0.0;
        assert!(cfg.validate(None).is_err());
        cfg.beta1 = 1.0;
        assert!(cfg.validate(None).is_ok());
        cfg.epsilon = 0.0;
        assert!(cfg.validate(None).is_err());
    }

    #[test]
    fn selector_parse_names() {
        assert_eq!("adaptive".parse::<SelectorKind>().unwrap(), SelectorKind::AdaptiveK);
        assert_eq!("MKL".parse::<SelectorKind>().unwrap(), SelectorKind::Mkl);
        assert!("median".parse::<SelectorKind>().is_err());
        assert_eq!("bias-corrected-mean".parse::<ThresholdVariant>().unwrap(), ThresholdVariant::BiasCorrectedMean);
    }

    #[test]
    fn oracle_selector_checks_flag_length() {
        let mut s = Selector::new(SelectorConfig::oracle()).unwrap();
        assert!(matches!(s.select(&[1.0, 2.0], &[false]), Err(SelectError::FlagLengthMismatch { .. })));
    }
}
