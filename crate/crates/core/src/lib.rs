//! Small-loss sample selection for training on label-noisy data.
//!
//! * [`selectors`]: vanilla, oracle, min-k (MKL) and Adaptive-k selection rules.
//! * [`theory`]: Gaussian-mixture model of clean and noisy losses and the MSE of
//!   each rule under it.
//! * [`simkit`]: synthetic datasets, label-noise injection, a small MLP trainer
//!   and a model-free loss-stream simulator.
//! * [`metrics`]: precision, recall and noise-ratio estimation from traces.
//! * [`cli`]: the `adaptive-k` command-line front end.

pub mod cli;
pub mod fmt;
pub mod metrics;
pub mod selectors;
pub mod simkit;
pub mod theory;
pub mod trace;
