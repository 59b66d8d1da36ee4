//! Acceptance suite. Runs as a plain program (no test harness) so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fail.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use adaptive_k::metrics::{selection_metrics, summarize_iterations};
use adaptive_k::selectors::{select_adaptive, select_mkl, select_oracle, SelectorConfig, ThresholdState, ThresholdVariant};
use adaptive_k::simkit::{simulate_stream, MlpModel};
use adaptive_k::theory::{
    adaptive_moments, adaptive_pdf, mkl_moments, mkl_pdf, mse_adk, mse_mkl, mse_sgd, order_statistic_pdf,
    GaussianMixture,
};
use common::{mc_mixture, mc_mkl, mc_truncated, simpson};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const BIN: &str = env!("CARGO_BIN_EXE_adaptive-k");

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within_time(v: Verdict, elapsed: Duration, limit_s: f64) -> Verdict {
    let ok = elapsed.as_secs_f64() < limit_s;
    verdict(v.pass && ok, format!("{}; {:.1}s (limit {limit_s}s)", v.detail, elapsed.as_secs_f64()))
}

fn headline() -> GaussianMixture {
    GaussianMixture::new(0.0, 1.0, 5.0, 2.0, 0.4).unwrap()
}

fn c1_normalization() -> Verdict {
    let g = headline();
    let (lo, hi) = (-25.0, 30.0);
    let panels = 200_000;
    let mut worst: f64 = 0.0;
    let mut check = |mass: f64| worst = worst.max((mass - 1.0).abs());
    check(simpson(|x| g.pdf(x), lo, hi, panels));
    for k in 1..=10 {
        check(simpson(|x| order_statistic_pdf(&g, 10, k, x).unwrap(), lo, hi, panels));
    }
    check(simpson(|x| mkl_pdf(&g, 10, 6, x).unwrap(), lo, hi, panels));
    check(simpson(|x| adaptive_pdf(&g, x).unwrap(), lo, 2.0, panels));
    verdict(worst < 1e-6, format!("max |mass - 1| = {worst:.2e} (tol 1e-6)"))
}

fn c2_mixture_moments() -> Verdict {
    let g = headline();
    let m = g.moments();
    let (mc_mean, mc_var) = mc_mixture(&g, 1_000_000, 2);
    let pass = m.mean == 2.0 && (m.variance - 8.2).abs() < 1e-9 && (mc_mean - 2.0).abs() < 0.05 && (mc_var - 8.2).abs() < 0.05;
    verdict(
        pass,
        format!("mean = {}, var = {:.12}; Monte Carlo mean {mc_mean:.4}, var {mc_var:.4} (tol 0.05)", m.mean, m.variance),
    )
}

fn c3_oracle_equivalence() -> Verdict {
    let g = headline();
    let mkl = mkl_moments(&g, 10, 6).unwrap();
    let mc = mc_mkl(&g, 10, 6, 1_000_000, 3);
    let adk = adaptive_moments(&g).unwrap();
    let rs = mc_truncated(&g, g.mean(), 1_000_000, 4);
    let zs = [mc.mean.z(mkl.mean), mc.variance.z(mkl.variance), rs.mean.z(adk.mean), rs.variance.z(adk.variance)];
    let worst = zs.iter().copied().fold(0.0, f64::max);
    verdict(
        worst < 3.0,
        format!(
            "z-scores mkl mean {:.2} var {:.2}, adaptive mean {:.2} var {:.2} (limit 3)",
            zs[0], zs[1], zs[2], zs[3]
        ),
    )
}

fn c4_dominance() -> Verdict {
    let mut points = 0;
    let mut violations = 0;
    for i in 0..=60 {
        let mu2 = 2.0 + 0.1 * i as f64;
        for j in 0..=30 {
            let sigma2 = 0.5 + 0.05 * j as f64;
            let g = GaussianMixture::new(0.0, 1.0, mu2, sigma2, 0.4).unwrap();
            points += 1;
            if mse_mkl(&g, 10, 6).unwrap() >= mse_sgd(&g).unwrap() {
                violations += 1;
            }
        }
    }
    let mut adk_fails = Vec::new();
    for tau in [0.1, 0.2, 0.3, 0.4] {
        let g = GaussianMixture::new(0.0, 1.0, 5.0, 2.0, tau).unwrap();
        if mse_adk(&g).unwrap() >= mse_mkl(&g, 10, 6).unwrap() {
            adk_fails.push(tau);
        }
    }
    verdict(
        violations == 0 && adk_fails.is_empty(),
        format!("mkl < sgd at {}/{points} grid points; adaptive < mkl failed at taus {adk_fails:?}", points - violations),
    )
}

fn c5_truncated_normal() -> Verdict {
    let g = GaussianMixture::new(0.0, 1.0, 5.0, 2.0, 0.0).unwrap();
    let m = adaptive_moments(&g).unwrap();
    let expected = -(2.0 / std::f64::consts::PI).sqrt();
    let mse = mse_adk(&g).unwrap();
    let (e1, e2) = ((m.mean - expected).abs(), (mse - 1.0).abs());
    verdict(e1 < 1e-6 && e2 < 1e-6, format!("|mean + sqrt(2/pi)| = {e1:.2e}, |mse - 1| = {e2:.2e} (tol 1e-6)"))
}

fn c6_gradients() -> Verdict {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for draw in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(60 + draw);
        let model = MlpModel::new(8, 16, 4, &mut rng);
        let rows: Vec<Vec<f64>> = (0..16).map(|_| (0..8).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let labels: Vec<usize> = (0..16).map(|_| rng.gen_range(0..4)).collect();
        let mut mask: Vec<bool> = (0..16).map(|_| rng.gen_bool(0.6)).collect();
        mask[0] = true;
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let analytic = model.backward(&model.forward(&refs), &refs, &labels, &mask).unwrap().flat();
        let mut probe = model.clone();
        let mut diff2 = 0.0;
        let mut norm_a = 0.0;
        let mut norm_n = 0.0;
        for (i, a) in analytic.iter().enumerate() {
            let p = model.param(i);
            probe.set_param(i, p + h);
            let up = probe.masked_loss(&refs, &labels, &mask);
            probe.set_param(i, p - h);
            let down = probe.masked_loss(&refs, &labels, &mask);
            probe.set_param(i, p);
            let n = (up - down) / (2.0 * h);
            diff2 += (a - n) * (a - n);
            norm_a += a * a;
            norm_n += n * n;
        }
        worst = worst.max(diff2.sqrt() / (norm_a.sqrt() + norm_n.sqrt()));
    }
    verdict(worst < 1e-4, format!("max relative error over 5 draws = {worst:.2e} (tol 1e-4)"))
}

fn c7_selector_properties() -> Verdict {
    let cases = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fail = |name| *failures.entry(name).or_default() += 1;
    let random_batch = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(1..=64);
        (0..n).map(|_| rng.gen_range(0.0..10.0)).collect::<Vec<f64>>()
    };
    let warmed = |rng: &mut ChaCha8Rng, cfg: &SelectorConfig| {
        let mut s = ThresholdState::new();
        for _ in 0..rng.gen_range(0..20) {
            let b: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..10.0)).collect();
            s = select_adaptive(&b, s, cfg).unwrap().1;
        }
        s
    };
    let variants = [ThresholdVariant::PaperExact, ThresholdVariant::BiasCorrectedMean];

    for _ in 0..cases {
        let losses = random_batch(&mut rng);
        let k = rng.gen_range(1..=losses.len());
        let sel = select_mkl(&losses, k).unwrap();
        let max_kept = losses.iter().zip(&sel.selected).filter(|p| *p.1).map(|p| *p.0).fold(f64::MIN, f64::max);
        let min_dropped = losses.iter().zip(&sel.selected).filter(|p| !*p.1).map(|p| *p.0).fold(f64::MAX, f64::min);
        if sel.n_selected != k || max_kept > min_dropped {
            fail("mkl cardinality");
        }
    }
    for c in 0..cases {
        let cfg = SelectorConfig::adaptive(variants[c % 2]);
        let state = warmed(&mut rng, &cfg);
        let losses = random_batch(&mut rng);
        let (sel, _) = select_adaptive(&losses, state, &cfg).unwrap();
        let monotone = (0..losses.len())
            .all(|i| (0..losses.len()).all(|j| !(sel.selected[j] && losses[i] <= losses[j]) || sel.selected[i]));
        if !monotone {
            fail("adaptive monotonicity");
        }
    }
    for c in 0..cases {
        let losses = random_batch(&mut rng);
        let mut perm: Vec<usize> = (0..losses.len()).collect();
        perm.shuffle(&mut rng);
        let permuted: Vec<f64> = perm.iter().map(|&i| losses[i]).collect();
        let k = losses.len().div_ceil(2);
        let (a, b) = (select_mkl(&losses, k).unwrap(), select_mkl(&permuted, k).unwrap());
        let mut sorted = losses.clone();
        sorted.sort_by(f64::total_cmp);
        let distinct = sorted.windows(2).all(|w| w[0] < w[1]);
        if distinct && perm.iter().enumerate().any(|(pos, &i)| b.selected[pos] != a.selected[i]) {
            fail("permutation equivariance");
        }
        let cfg = SelectorConfig::adaptive(variants[c % 2]);
        let state = warmed(&mut rng, &cfg);
        let (a, _) = select_adaptive(&losses, state, &cfg).unwrap();
        let (b, _) = select_adaptive(&permuted, state, &cfg).unwrap();
        let t = a.threshold.unwrap();
        let clear = |l: f64| (l - t).abs() > 1e-12 * t.abs().max(1.0);
        if perm.iter().enumerate().any(|(pos, &i)| clear(losses[i]) && b.selected[pos] != a.selected[i]) {
            fail("permutation equivariance");
        }
    }
    for _ in 0..cases {
        let n = rng.gen_range(1..=64);
        let mut flags: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        flags[rng.gen_range(0..n)] = false;
        let sel = select_oracle(&flags).unwrap();
        let m = selection_metrics(&sel.selected, &flags).unwrap();
        if m.precision != Some(1.0) || m.recall != Some(1.0) {
            fail("oracle precision/recall");
        }
    }
    let total: usize = failures.values().sum();
    verdict(total == 0, format!("4 properties x {cases} cases, failures: {failures:?}"))
}

fn c8_stream_convergence() -> Verdict {
    let g = headline();
    let cfg = SelectorConfig::adaptive(ThresholdVariant::BiasCorrectedMean);
    let trace = simulate_stream(&g, 10_000, 10, &cfg, 8).unwrap();
    let iters = &trace.epochs[0].iterations;
    let s = summarize_iterations(&iters[iters.len() - 5000..]);
    let target = g.cdf(2.0);
    let err = (s.selected_fraction - target).abs();
    verdict(err <= 0.01, format!("selected fraction {:.4} vs F_D(2) = {target:.4}, |diff| = {err:.4} (tol 0.01)", s.selected_fraction))
}

/// selector -> tau -> (mean max test accuracy, mean noise estimate)
type Means = BTreeMap<String, BTreeMap<String, (f64, f64)>>;

fn train(out: &Path, extra: &[&str]) -> Result<Means, String> {
    let mut args = vec!["train", "--out", out.to_str().unwrap()];
    args.extend(extra);
    let o = Command::new(BIN).args(&args).output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    let text = std::fs::read_to_string(out.join("summary.csv")).map_err(|e| e.to_string())?;
    let mut sums: BTreeMap<(String, String), (f64, f64, f64)> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = sums.entry((f[0].to_string(), f[1].to_string())).or_default();
        e.0 += f[3].parse::<f64>().unwrap();
        e.1 += f[4].parse::<f64>().unwrap();
        e.2 += 1.0;
    }
    let mut means = Means::new();
    for ((sel, tau), (acc, est, n)) in sums {
        means.entry(sel).or_default().insert(tau, (acc / n, est / n));
    }
    Ok(means)
}

const C9_ARGS: &[&str] = &["--selectors", "oracle,vanilla,mkl,adaptive", "--tau", "0.4,0", "--seeds", "3"];

fn c9_ordering(out: &Path) -> Verdict {
    let means = match train(out, C9_ARGS) {
        Ok(m) => m,
        Err(e) => return verdict(false, format!("train failed: {e}")),
    };
    let acc = |sel: &str, tau: &str| 100.0 * means[sel][tau].0;
    let (oracle, adaptive, mkl, vanilla) = (acc("oracle", "0.4"), acc("adaptive", "0.4"), acc("mkl", "0.4"), acc("vanilla", "0.4"));
    let gap0 = (acc("adaptive", "0") - acc("vanilla", "0")).abs();
    let pass = oracle >= adaptive && adaptive >= mkl.max(vanilla) && oracle - adaptive <= 3.0 && gap0 <= 1.0;
    verdict(
        pass,
        format!(
            "tau 0.4: oracle {oracle:.2} adaptive {adaptive:.2} mkl {mkl:.2} vanilla {vanilla:.2} (gap {:.2} <= 3); tau 0: |adaptive - vanilla| = {gap0:.2} <= 1",
            oracle - adaptive
        ),
    )
}

fn c10_noise_estimation(out: &Path, c9_out: &Path) -> Verdict {
    let mut estimates = match train(out, &["--selectors", "adaptive", "--tau", "0.1,0.2,0.3", "--seeds", "3"]) {
        Ok(m) => m["adaptive"].clone(),
        Err(e) => return verdict(false, format!("train failed: {e}")),
    };
    // tau 0.4 was already run for the ordering criterion
    match std::fs::read_to_string(c9_out.join("summary.csv")) {
        Ok(text) => {
            let rows: Vec<f64> = text
                .lines()
                .filter(|l| l.starts_with("adaptive,0.4,"))
                .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
                .collect();
            estimates.insert("0.4".into(), (f64::NAN, rows.iter().sum::<f64>() / rows.len() as f64));
        }
        Err(e) => return verdict(false, format!("missing tau 0.4 run: {e}")),
    }
    let mut pass = estimates.len() == 4;
    let mut parts = Vec::new();
    for (tau, (_, est)) in &estimates {
        let t: f64 = tau.parse().unwrap();
        pass &= (est - t).abs() <= 0.05;
        parts.push(format!("tau {tau} -> {est:.3}"));
    }
    verdict(pass, format!("{} (tol 0.05)", parts.join(", ")))
}

fn c11_determinism(first: &Path, second: &Path) -> Verdict {
    if let Err(e) = train(second, C9_ARGS) {
        return verdict(false, format!("rerun failed: {e}"));
    }
    let a = std::fs::read(first.join("summary.csv")).unwrap_or_default();
    let b = std::fs::read(second.join("summary.csv")).unwrap_or_default();
    verdict(!a.is_empty() && a == b, format!("summary.csv {} bytes, identical: {}", a.len(), a == b))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let c9_out = dir.path().join("c9");
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut timed = |id, name, limit: Option<f64>, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let v = match limit {
            Some(l) => within_time(v, start.elapsed(), l),
            None => v,
        };
        println!("criterion {id:>2} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, name, v));
    };

    timed(1, "density normalization", Some(5.0), &mut c1_normalization);
    timed(2, "mixture moments", None, &mut c2_mixture_moments);
    timed(3, "Monte Carlo oracle equivalence", Some(60.0), &mut c3_oracle_equivalence);
    timed(4, "MSE dominance regions", Some(30.0), &mut c4_dominance);
    timed(5, "truncated-normal closed form", None, &mut c5_truncated_normal);
    timed(6, "gradient check", None, &mut c6_gradients);
    timed(7, "selector properties", None, &mut c7_selector_properties);
    timed(8, "stream estimator convergence", None, &mut c8_stream_convergence);
    timed(9, "desk-scale accuracy ordering", Some(600.0), &mut || c9_ordering(&c9_out));
    timed(10, "noise-ratio estimation", None, &mut || c10_noise_estimation(&dir.path().join("c10"), &c9_out));
    timed(11, "byte-identical rerun", None, &mut || c11_determinism(&c9_out, &dir.path().join("c11")));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
