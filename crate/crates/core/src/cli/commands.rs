use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{OutputFormat, SimulateConfig, TheoryConfig, TrainConfig};
use super::output::OutputSet;
use super::CliError;
use crate::fmt::{opt_sig9, sig9};
use crate::metrics::{estimate_noise_ratio, summarize_iterations};
use crate::selectors::{SelectorKind, ThresholdVariant};
use crate::simkit::{inject_noise, make_blobs, simulate_stream, train, BlobSpec, ModelConfig, NoisyDataset, TrainSchedule};
use crate::theory::surface::{write_report_row, SURFACE_HEADER};
use crate::theory::{adaptive_pdf, mkl_pdf, mkl_selection_quality, mse_surface, Axis, MseReport, SurfaceBase, SweepParam};
use crate::trace::RunTrace;

pub const SURFACE_FILE: &str = "surface.csv";
pub const PDF_CURVES_FILE: &str = "pdf_curves.csv";
pub const STREAM_STEM: &str = "stream";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "selector,tau,seed,max_test_acc,est_noise_ratio";

fn say(stdout: &mut dyn Write, line: std::fmt::Arguments) -> Result<(), CliError> {
    stdout
        .write_fmt(line)
        .and_then(|_| stdout.write_all(b"\n"))
        .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))
}

/// Prints the MSE triple at the configured point and, unless `point_only`,
/// writes the (mu2, sigma2) surface for every configured tau plus the density
/// curves.
pub fn cmd_theory(cfg: &TheoryConfig, out: &Path, stdout: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let gm = cfg.mixture()?;
    let report = MseReport::compute(&gm, cfg.n, cfg.k)?;
    say(
        stdout,
        format_args!(
            "mu1={} sigma1={} mu2={} sigma2={} tau={} n={} k={}",
            sig9(gm.mu1),
            sig9(gm.sigma1),
            sig9(gm.mu2),
            sig9(gm.sigma2),
            sig9(gm.tau),
            cfg.n,
            cfg.k
        ),
    )?;
    say(
        stdout,
        format_args!("mse_sgd={} mse_mkl={} mse_adk={}", sig9(report.mse_sgd), sig9(report.mse_mkl), sig9(report.mse_adk)),
    )?;
    if cfg.point_only {
        return Ok(Vec::new());
    }

    let axes = [
        Axis::new(SweepParam::Mu2, cfg.mu2_min, cfg.mu2_max, cfg.mu2_step)?,
        Axis::new(SweepParam::Sigma2, cfg.sigma2_min, cfg.sigma2_max, cfg.sigma2_step)?,
    ];
    if cfg.taus.is_empty() {
        return Err(CliError::Config("taus must not be empty".into()));
    }
    if cfg.pdf_curves && (cfg.pdf_points < 2 || cfg.pdf_x_max.partial_cmp(&cfg.pdf_x_min) != Some(std::cmp::Ordering::Greater)) {
        return Err(CliError::Config("pdf curves need pdf-points >= 2 and pdf-x-max > pdf-x-min".into()));
    }
    let mut reports = Vec::new();
    for &tau in &cfg.taus {
        let base = SurfaceBase { mu1: cfg.mu1, sigma1: cfg.sigma1, mu2: cfg.mu2, sigma2: cfg.sigma2, tau, n: cfg.n, k: cfg.k };
        reports.extend(mse_surface(&axes, &base)?.reports);
    }

    let curves = if cfg.pdf_curves {
        let step = (cfg.pdf_x_max - cfg.pdf_x_min) / (cfg.pdf_points - 1) as f64;
        let rows = (0..cfg.pdf_points)
            .into_par_iter()
            .map(|i| {
                let x = cfg.pdf_x_min + step * i as f64;
                Ok([x, gm.pdf(x), mkl_pdf(&gm, cfg.n, cfg.k, x)?, adaptive_pdf(&gm, x)?])
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Some(rows)
    } else {
        None
    };

    let mut files = OutputSet::new(out)?;
    files.write_with(SURFACE_FILE, |w| {
        writeln!(w, "{SURFACE_HEADER}")?;
        reports.iter().try_for_each(|r| write_report_row(w, r))
    })?;
    if let Some(rows) = curves {
        files.write_with(PDF_CURVES_FILE, |w| {
            writeln!(w, "x,f_D,f_MKL,f_adk")?;
            for r in &rows {
                writeln!(w, "{},{},{},{}", sig9(r[0]), sig9(r[1]), sig9(r[2]), sig9(r[3]))?;
            }
            Ok(())
        })?;
    }
    say(stdout, format_args!("surface rows={} taus={}", reports.len(), cfg.taus.len()))?;
    Ok(files.commit())
}

fn write_trace(files: &mut OutputSet, stem: &str, trace: &RunTrace, format: OutputFormat) -> Result<(), CliError> {
    if format.json() {
        files.write_with(&format!("{stem}.json"), |w| trace.write_json(w))?;
    }
    if format.csv() {
        files.write_with(&format!("{stem}.csv"), |w| trace.write_csv(w))?;
    }
    Ok(())
}

/// Runs the configured selector over a synthetic loss stream, writes the
/// per-batch trace and prints long-run selection quality next to its
/// model-predicted value.
pub fn cmd_simulate(
    cfg: &SimulateConfig,
    seed: u64,
    format: OutputFormat,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<Vec<PathBuf>, CliError> {
    let gm = cfg.mixture()?;
    if cfg.summary_window == 0 {
        return Err(CliError::Config("summary-window must be positive".into()));
    }
    let trace = simulate_stream(&gm, cfg.n_batches, cfg.batch_size, &cfg.selector_config(), seed)?;
    let iters = &trace.epochs[0].iterations;
    let window = cfg.summary_window.min(iters.len());
    let s = summarize_iterations(&iters[iters.len() - window..]);

    let mut files = OutputSet::new(out)?;
    write_trace(&mut files, STREAM_STEM, &trace, format)?;

    let variant = match cfg.selector {
        SelectorKind::AdaptiveK => format!(" variant={}", variant_name(cfg.threshold_variant)),
        SelectorKind::Mkl => format!(" k={}", cfg.k),
        _ => String::new(),
    };
    say(
        stdout,
        format_args!("selector={}{variant} batches={} batch_size={} window={window}", cfg.selector, cfg.n_batches, cfg.batch_size),
    )?;
    say(
        stdout,
        format_args!(
            "precision={} recall={} selected_fraction={:.3}",
            fixed3(s.precision),
            fixed3(s.recall),
            s.selected_fraction
        ),
    )?;
    match cfg.selector {
        SelectorKind::Oracle => say(stdout, format_args!("expected precision=1.000 recall=1.000 selected_fraction={:.3}", 1.0 - gm.tau))?,
        SelectorKind::Vanilla => say(stdout, format_args!("expected precision={:.3} recall=1.000 selected_fraction=1.000", 1.0 - gm.tau))?,
        SelectorKind::Mkl => {
            let q = mkl_selection_quality(&gm, cfg.batch_size, cfg.k)?;
            say(
                stdout,
                format_args!(
                    "expected precision={:.3} recall={:.3} selected_fraction={:.3}",
                    q.precision,
                    q.recall,
                    cfg.k as f64 / cfg.batch_size as f64
                ),
            )?
        }
        SelectorKind::AdaptiveK => say(stdout, format_args!("expected selected_fraction={:.3}", gm.cdf(gm.mean())))?,
    }
    Ok(files.commit())
}

fn variant_name(v: ThresholdVariant) -> &'static str {
    match v {
        ThresholdVariant::PaperExact => "paper-exact",
        ThresholdVariant::BiasCorrectedMean => "bias-corrected-mean",
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn fixed3(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), |v| format!("{v:.3}"))
}

/// SplitMix64 finalizer; spreads related seeds over unrelated streams.
fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trace_stem(kind: SelectorKind, tau: f64, seed: u64) -> String {
    format!("trace_{}_tau{}_seed{seed}", kind.name(), sig9(tau))
}

fn validate_train(cfg: &TrainConfig) -> Result<(), CliError> {
    let bad = |msg: &str| Err(CliError::Config(msg.into()));
    if cfg.selectors.is_empty() {
        return bad("selectors must not be empty");
    }
    if cfg.tau.is_empty() {
        return bad("tau must not be empty");
    }
    if cfg.tau.iter().any(|t| !(0.0..1.0).contains(t)) {
        return bad("every tau must lie in [0, 1)");
    }
    if cfg.seeds == 0 {
        return bad("seeds must be at least 1");
    }
    if cfg.n_train == 0 || cfg.n_test == 0 {
        return bad("n-train and n-test must be positive");
    }
    if cfg.estimate_window == 0 {
        return bad("estimate-window must be positive");
    }
    Ok(())
}

struct Job {
    kind: SelectorKind,
    tau: f64,
    seed: u64,
    data: usize,
}

/// Trains every (tau, selector, seed) combination, writes one trace per run
/// and a summary table last.
pub fn cmd_train(
    cfg: &TrainConfig,
    base_seed: u64,
    format: OutputFormat,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<Vec<PathBuf>, CliError> {
    validate_train(cfg)?;
    let model = ModelConfig { hidden: cfg.hidden };

    // One (train, test) pair per (tau, seed); every selector sees the same data
    // and the same initial weights.
    let mut datasets: Vec<(NoisyDataset, NoisyDataset, u64)> = Vec::new();
    let mut jobs = Vec::new();
    for &tau in &cfg.tau {
        let first = datasets.len();
        for i in 0..cfg.seeds {
            let seed = base_seed.wrapping_add(i as u64);
            let spec = |n| BlobSpec {
                n_samples: n,
                n_features: cfg.n_features,
                n_classes: cfg.n_classes,
                class_separation: cfg.class_separation,
            };
            let clean = make_blobs(&spec(cfg.n_train), derive_seed(seed, 1))?;
            let test = make_blobs(&spec(cfg.n_test), derive_seed(seed, 2))?;
            let noisy = inject_noise(&clean, tau, cfg.noise_mode, derive_seed(seed, 3))?;
            datasets.push((noisy, test, derive_seed(seed, 4)));
        }
        for &kind in &cfg.selectors {
            cfg.selector_config(kind, tau).validate(Some(cfg.batch_size)).map_err(|e| CliError::Config(e.to_string()))?;
            for i in 0..cfg.seeds {
                jobs.push(Job { kind, tau, seed: base_seed.wrapping_add(i as u64), data: first + i });
            }
        }
    }

    let traces = jobs
        .par_iter()
        .map(|job| {
            let (train_set, test_set, model_seed) = &datasets[job.data];
            let schedule = TrainSchedule {
                vanilla_epochs: cfg.vanilla_epochs,
                adaptive_epochs: cfg.adaptive_epochs,
                batch_size: cfg.batch_size,
                learning_rate: cfg.learning_rate,
                seed: *model_seed,
                warm_ema: cfg.warm_ema,
            };
            let mut trace = train(train_set, &model, &schedule, &cfg.selector_config(job.kind, job.tau), test_set)?;
            trace.meta.seed = job.seed;
            trace.meta.config["tau"] = serde_json::json!(job.tau);
            Ok(trace)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let window = cfg.estimate_window.min(cfg.adaptive_epochs);
    let mut files = OutputSet::new(out)?;
    let mut rows = Vec::with_capacity(jobs.len());
    for (job, trace) in jobs.iter().zip(&traces) {
        write_trace(&mut files, &trace_stem(job.kind, job.tau, job.seed), trace, format)?;
        let est = if window > 0 { Some(estimate_noise_ratio(trace, window).map_err(|e| CliError::Runtime(e.to_string()))?) } else { None };
        rows.push((job, trace.max_test_accuracy(), est));
    }
    files.write_with(SUMMARY_FILE, |w| {
        writeln!(w, "{SUMMARY_HEADER}")?;
        for (job, acc, est) in &rows {
            writeln!(w, "{},{},{},{},{}", job.kind.name(), sig9(job.tau), job.seed, opt_sig9(*acc), opt_sig9(*est))?;
        }
        Ok(())
    })?;

    for &tau in &cfg.tau {
        for &kind in &cfg.selectors {
            let group: Vec<_> = rows.iter().filter(|(j, ..)| j.kind == kind && j.tau == tau).collect();
            let acc = mean_of(group.iter().filter_map(|r| r.1));
            let est = mean_of(group.iter().filter_map(|r| r.2));
            say(
                stdout,
                format_args!(
                    "selector={} tau={} runs={} mean_max_test_acc={} mean_est_noise_ratio={}",
                    kind.name(),
                    sig9(tau),
                    group.len(),
                    acc.map_or_else(|| "nan".into(), |a| format!("{:.2}%", 100.0 * a)),
                    fixed3(est)
                ),
            )?;
        }
    }
    Ok(files.commit())
}
