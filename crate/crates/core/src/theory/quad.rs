//! Globally adaptive composite Simpson quadrature.
//!
//! The interval is cut into equal starting panels (plus any caller-supplied
//! breakpoints). The panel with the largest local error estimate is bisected
//! until the summed estimate drops below the absolute tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: achieved {achieved:e} after {panels} panels (tolerance {tolerance:e})")]
    NotConverged { achieved: f64, tolerance: f64, panels: usize },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
    #[error("invalid integration interval [{0}, {1}]")]
    BadInterval(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_panels: usize,
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-9, max_panels: 1 << 20, initial_panels: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    // left and right half midpoints
    fl: f64,
    fr: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, QuadError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(QuadError::NonFinite(x))
    }
}

fn make_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> Result<Panel, QuadError> {
    let m = 0.5 * (a + b);
    let fl = eval(f, 0.5 * (a + m))?;
    let fr = eval(f, 0.5 * (m + b))?;
    let h = b - a;
    let coarse = h / 6.0 * (fa + 4.0 * fm + fb);
    let fine = h / 12.0 * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb);
    let diff = fine - coarse;
    Ok(Panel { a, b, fa, fm, fb, fl, fr, value: fine + diff / 15.0, error: diff.abs() / 15.0 })
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Integral, QuadError> {
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Integrates `f` over `[a, b]`. Interior `breaks` become panel edges, which
/// helps when the integrand has kinks or sharp peaks at known locations.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<Integral, QuadError> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadError::BadInterval(a, b));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error_estimate: 0.0, panels: 0 });
    }
    let n0 = opts.initial_panels.max(1);
    let mut edges: Vec<f64> = (0..=n0).map(|i| a + (b - a) * i as f64 / n0 as f64).collect();
    edges[n0] = b;
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::with_capacity(edges.len() * 4);
    let mut f_left = eval(&f, edges[0])?;
    for w in edges.windows(2) {
        let fb = eval(&f, w[1])?;
        let fm = eval(&f, 0.5 * (w[0] + w[1]))?;
        heap.push(make_panel(&f, w[0], w[1], f_left, fm, fb)?);
        f_left = fb;
    }

    let mut total_error: f64 = heap.iter().map(|p| p.error).sum();
    while total_error > opts.abs_tol {
        if heap.len() >= opts.max_panels {
            return Err(QuadError::NotConverged {
                achieved: total_error,
                tolerance: opts.abs_tol,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let m = 0.5 * (worst.a + worst.b);
        // panel too narrow to split further in f64
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            return Err(QuadError::NotConverged {
                achieved: total_error,
                tolerance: opts.abs_tol,
                panels: heap.len(),
            });
        }
        let left = make_panel(&f, worst.a, m, worst.fa, worst.fl, worst.fm)?;
        let right = make_panel(&f, m, worst.b, worst.fm, worst.fr, worst.fb)?;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // running sums drift; refresh when the estimate looks converged
        if total_error <= opts.abs_tol {
            total_error = heap.iter().map(|p| p.error).sum();
        }
    }

    // sum in position order so the result does not depend on heap layout
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = neumaier_sum(panels.iter().map(|p| p.value));
    Ok(Integral { value, error_estimate: total_error, panels: panels.len() })
}

fn neumaier_sum<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
