//! One-hidden-layer tanh classifier with softmax cross-entropy, trained by
//! plain SGD.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub n_in: usize,
    pub hidden: usize,
    pub n_out: usize,
    /// `hidden x n_in`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `n_out x hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Activations cached by a forward pass for the backward pass.
pub struct BatchForward {
    hidden: Vec<Vec<f64>>,
    log_probs: Vec<Vec<f64>>,
}

impl BatchForward {
    pub fn losses(&self, labels: &[usize]) -> Vec<f64> {
        self.log_probs.iter().zip(labels).map(|(lp, &y)| -lp[y]).collect()
    }

    pub fn predictions(&self) -> Vec<usize> {
        self.log_probs.iter().map(|lp| argmax(lp)).collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

impl MlpModel {
    /// Weights drawn from `N(0, 1 / fan_in)`, biases zero.
    pub fn new<R: Rng + ?Sized>(n_in: usize, hidden: usize, n_out: usize, rng: &mut R) -> Self {
        let mut draw = |len: usize, fan_in: usize| -> Vec<f64> {
            let scale = (1.0 / fan_in as f64).sqrt();
            (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let w1 = draw(hidden * n_in, n_in);
        let w2 = draw(n_out * hidden, hidden);
        Self { n_in, hidden, n_out, w1, b1: vec![0.0; hidden], w2, b2: vec![0.0; n_out] }
    }

    fn hidden_layer(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.n_in..(h + 1) * self.n_in];
                (self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh()
            })
            .collect()
    }

    fn log_softmax_output(&self, a: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.n_out)
            .map(|o| {
                let row = &self.w2[o * self.hidden..(o + 1) * self.hidden];
                self.b2[o] + row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        logits.into_iter().map(|z| z - lse).collect()
    }

    pub fn forward(&self, rows: &[&[f64]]) -> BatchForward {
        let hidden: Vec<Vec<f64>> = rows.iter().map(|x| self.hidden_layer(x)).collect();
        let log_probs = hidden.iter().map(|a| self.log_softmax_output(a)).collect();
        BatchForward { hidden, log_probs }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.log_softmax_output(&self.hidden_layer(x)))
    }

    /// Mean cross-entropy over the masked rows; NaN when the mask is empty.
    pub fn masked_loss(&self, rows: &[&[f64]], labels: &[usize], mask: &[bool]) -> f64 {
        let losses = self.forward(rows).losses(labels);
        let (sum, count) = losses
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold((0.0, 0usize), |(s, c), (l, _)| (s + l, c + 1));
        sum / count as f64
    }

    /// Gradient of the mean cross-entropy over the selected rows.
    /// Returns `None` when nothing is selected.
    pub fn backward(
        &self,
        fwd: &BatchForward,
        rows: &[&[f64]],
        labels: &[usize],
        mask: &[bool],
    ) -> Option<Gradients> {
        let count = mask.iter().filter(|&&m| m).count();
        if count == 0 {
            return None;
        }
        let scale = 1.0 / count as f64;
        let mut g = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.n_out],
        };
        let mut delta_hidden = vec![0.0; self.hidden];
        for i in (0..rows.len()).filter(|&i| mask[i]) {
            let a = &fwd.hidden[i];
            // dL/dz = softmax - onehot
            let delta_out: Vec<f64> = fwd.log_probs[i]
                .iter()
                .enumerate()
                .map(|(o, lp)| scale * (lp.exp() - if o == labels[i] { 1.0 } else { 0.0 }))
                .collect();
            delta_hidden.iter_mut().for_each(|d| *d = 0.0);
            for (o, &d) in delta_out.iter().enumerate() {
                g.b2[o] += d;
                let w_row = &self.w2[o * self.hidden..(o + 1) * self.hidden];
                let g_row = &mut g.w2[o * self.hidden..(o + 1) * self.hidden];
                for h in 0..self.hidden {
                    g_row[h] += d * a[h];
                    delta_hidden[h] += d * w_row[h];
                }
            }
            let x = rows[i];
            for h in 0..self.hidden {
                let d = delta_hidden[h] * (1.0 - a[h] * a[h]);
                g.b1[h] += d;
                let g_row = &mut g.w1[h * self.n_in..(h + 1) * self.n_in];
                for (gw, &xv) in g_row.iter_mut().zip(x) {
                    *gw += d * xv;
                }
            }
        }
        Some(g)
    }

    pub fn apply_sgd(&mut self, g: &Gradients, learning_rate: f64) {
        let step = |p: &mut [f64], d: &[f64]| p.iter_mut().zip(d).for_each(|(w, g)| *w -= learning_rate * g);
        step(&mut self.w1, &g.w1);
        step(&mut self.b1, &g.b1);
        step(&mut self.w2, &g.w2);
        step(&mut self.b2, &g.b2);
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn slot(&mut self, i: usize) -> &mut f64 {
        let (a, b, c) = (self.w1.len(), self.b1.len(), self.w2.len());
        if i < a {
            &mut self.w1[i]
        } else if i < a + b {
            &mut self.b1[i - a]
        } else if i < a + b + c {
            &mut self.w2[i - a - b]
        } else {
            &mut self.b2[i - a - b - c]
        }
    }

    pub fn param(&self, i: usize) -> f64 {
        let (a, b, c) = (self.w1.len(), self.b1.len(), self.w2.len());
        if i < a {
            self.w1[i]
        } else if i < a + b {
            self.b1[i - a]
        } else if i < a + b + c {
            self.w2[i - a - b]
        } else {
            self.b2[i - a - b - c]
        }
    }

    pub fn set_param(&mut self, i: usize, value: f64) {
        *self.slot(i) = value;
    }

    pub fn all_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2].iter().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

impl Gradients {
    /// Flat view in the same order as [`MlpModel::param`].
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len());
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.extend_from_slice(&self.b2);
        v
    }
}
