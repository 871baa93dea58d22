//! Feed-forward quantile regression network with hand-written backprop
//! and Adam.
//!
//! Parameters live in one flat vector. Layer `l` maps `n_in → n_out` and
//! stores its weights row-major (`w[o·n_in + i]`) followed by its biases.
//! Hidden layers apply the activation; the output layer is linear with one
//! unit per quantile level.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Mean over levels of q·(y−ŷ)⁺ + (1−q)·(ŷ−y)⁺.
pub fn pinball_loss(pred: &[f64], target: f64, levels: &[f64]) -> f64 {
    let total: f64 = pred
        .iter()
        .zip(levels)
        .map(|(&p, &q)| {
            let r = target - p;
            if r > 0.0 {
                q * r
            } else {
                (q - 1.0) * r
            }
        })
        .sum();
    total / levels.len() as f64
}

/// ∂ pinball / ∂ŷ_k; the subgradient at a tie is taken from the ŷ > y side.
pub fn pinball_grad(pred: &[f64], target: f64, levels: &[f64]) -> Vec<f64> {
    let k = levels.len() as f64;
    pred.iter()
        .zip(levels)
        .map(|(&p, &q)| if target > p { -q / k } else { (1.0 - q) / k })
        .collect()
}

pub fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Config("at least one quantile level is required".into()));
    }
    for (i, &q) in levels.iter().enumerate() {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Config(format!("quantile level {q} outside (0, 1)")));
        }
        if levels[..i].contains(&q) {
            return Err(Error::Config(format!("duplicate quantile level {q}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileNet {
    sizes: Vec<usize>,
    activation: Activation,
    levels: Vec<f64>,
    params: Vec<f64>,
    adam: AdamState,
}

/// Per-layer pre-activations and activations of one forward pass.
#[derive(Debug, Default)]
struct Trace {
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
}

impl QuantileNet {
    /// Glorot-uniform weights and zero biases drawn from `seed`.
    pub fn new(n_in: usize, hidden: &[usize], levels: &[f64], activation: Activation, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(n_in, hidden, levels, activation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut off = 0;
        for l in 0..net.sizes.len() - 1 {
            let (ni, no) = (net.sizes[l], net.sizes[l + 1]);
            let a = (6.0 / (ni + no) as f64).sqrt();
            for w in &mut net.params[off..off + ni * no] {
                *w = rng.gen_range(-a..a);
            }
            off += ni * no + no;
        }
        Ok(net)
    }

    pub fn zeros(n_in: usize, hidden: &[usize], levels: &[f64], activation: Activation) -> Result<Self> {
        validate_levels(levels)?;
        if n_in == 0 || hidden.contains(&0) {
            return Err(Error::Config("network layers must be nonempty".into()));
        }
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(levels.len());
        let n: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(QuantileNet {
            sizes,
            activation,
            levels: levels.to_vec(),
            params: vec![0.0; n],
            adam: AdamState {
                config: AdamConfig::default(),
                m: vec![0.0; n],
                v: vec![0.0; n],
                step: 0,
            },
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
    pub fn n_params(&self) -> usize {
        self.params.len()
    }
    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    /// Offset of the output layer's biases.
    pub fn output_bias_offset(&self) -> usize {
        self.params.len() - self.levels.len()
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut tr = Trace::default();
        let mut input = x.to_vec();
        let mut off = 0;
        let n_layers = self.sizes.len() - 1;
        for l in 0..n_layers {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + ni * no];
            let b = &self.params[off + ni * no..off + ni * no + no];
            let z: Vec<f64> = (0..no)
                .map(|o| {
                    b[o] + w[o * ni..(o + 1) * ni]
                        .iter()
                        .zip(&input)
                        .map(|(a, c)| a * c)
                        .sum::<f64>()
                })
                .collect();
            let a: Vec<f64> = if l + 1 < n_layers {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                z.clone()
            };
            tr.a.push(std::mem::replace(&mut input, a.clone()));
            tr.z.push(z);
            off += ni * no + no;
        }
        tr.a.push(input);
        tr
    }

    /// Raw per-level outputs in level order.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.sizes[0], "input width");
        self.trace(x).a.pop().unwrap()
    }

    /// Outputs sorted ascending so quantiles never cross.
    pub fn quantiles(&self, x: &[f64]) -> Vec<f64> {
        let mut q = self.forward(x);
        q.sort_by(f64::total_cmp);
        q
    }

    /// Sorted output paired with the level closest to 0.5.
    pub fn median(&self, x: &[f64]) -> f64 {
        let mut order: Vec<usize> = (0..self.levels.len()).collect();
        order.sort_by(|&a, &b| self.levels[a].total_cmp(&self.levels[b]));
        let k = order
            .iter()
            .position(|&i| {
                let d = (self.levels[i] - 0.5).abs();
                self.levels.iter().all(|q| (q - 0.5).abs() >= d)
            })
            .unwrap();
        self.quantiles(x)[k]
    }

    pub fn loss(&self, x: &[f64], y: f64) -> f64 {
        pinball_loss(&self.forward(x), y, &self.levels)
    }

    /// Distance of `(x, y)` from the nearest point where the loss is not
    /// differentiable: a zero ReLU pre-activation or a zero pinball residual.
    pub fn kink_distance(&self, x: &[f64], y: f64) -> f64 {
        let tr = self.trace(x);
        let (last, hidden) = tr.z.split_last().unwrap();
        let residuals = last.iter().map(|q| (y - q).abs());
        match self.activation {
            Activation::Relu => hidden
                .iter()
                .flatten()
                .map(|z| z.abs())
                .chain(residuals)
                .fold(f64::INFINITY, f64::min),
            Activation::Tanh => residuals.fold(f64::INFINITY, f64::min),
        }
    }

    /// Loss and gradient with respect to every parameter for one sample.
    pub fn backward(&self, x: &[f64], y: f64) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.params.len()];
        let loss = self.accumulate(x, y, 1.0, &mut g);
        (loss, g)
    }

    /// Adds `scale · ∇loss` into `grad` and returns the loss.
    fn accumulate(&self, x: &[f64], y: f64, scale: f64, grad: &mut [f64]) -> f64 {
        let tr = self.trace(x);
        let out = tr.a.last().unwrap();
        let loss = pinball_loss(out, y, &self.levels);
        let mut delta = pinball_grad(out, y, &self.levels);
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in 0..n_layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        for l in (0..n_layers).rev() {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let a_prev = &tr.a[l];
            for o in 0..no {
                let d = delta[o] * scale;
                if d != 0.0 {
                    for (gw, ap) in grad[off + o * ni..off + (o + 1) * ni].iter_mut().zip(a_prev) {
                        *gw += d * ap;
                    }
                }
                grad[off + ni * no + o] += d;
            }
            if l > 0 {
                let w = &self.params[off..off + ni * no];
                let z_prev = &tr.z[l - 1];
                delta = (0..ni)
                    .map(|i| {
                        let s: f64 = (0..no).map(|o| w[o * ni + i] * delta[o]).sum();
                        s * self.activation.derivative(z_prev[i])
                    })
                    .collect();
            }
        }
        loss
    }

    /// Mean loss and mean gradient over a batch.
    pub fn batch_gradient(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.params.len()];
        let scale = 1.0 / xs.len() as f64;
        let loss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| self.accumulate(x, y, scale, &mut g))
            .sum();
        (loss * scale, g)
    }

    /// One bias-corrected Adam update.
    pub fn adam_step(&mut self, grads: &[f64], lr: f64) {
        assert_eq!(grads.len(), self.params.len());
        let st = &mut self.adam;
        let AdamConfig { beta1, beta2, eps } = st.config;
        st.step += 1;
        let bc1 = 1.0 - beta1.powi(st.step as i32);
        let bc2 = 1.0 - beta2.powi(st.step as i32);
        for (k, &g) in grads.iter().enumerate() {
            st.m[k] = beta1 * st.m[k] + (1.0 - beta1) * g;
            st.v[k] = beta2 * st.v[k] + (1.0 - beta2) * g * g;
            let m_hat = st.m[k] / bc1;
            let v_hat = st.v[k] / bc2;
            self.params[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }

    pub fn mean_loss(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        xs.iter().zip(ys).map(|(x, &y)| self.loss(x, y)).sum::<f64>() / xs.len() as f64
    }

    /// Minibatch Adam with early stopping on `val`; the parameters of the
    /// best validation epoch are restored on return.
    pub fn train(
        &mut self,
        train: (&[Vec<f64>], &[f64]),
        val: (&[Vec<f64>], &[f64]),
        cfg: &TrainConfig,
    ) -> Result<TrainSummary> {
        let (xs, ys) = train;
        if xs.is_empty() || xs.len() != ys.len() || val.0.len() != val.1.len() {
            return Err(Error::InsufficientData(format!(
                "network training needs aligned, nonempty samples (got {} inputs, {} targets)",
                xs.len(),
                ys.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let monitor = |net: &QuantileNet| {
            if val.0.is_empty() {
                net.mean_loss(xs, ys)
            } else {
                net.mean_loss(val.0, val.1)
            }
        };
        let mut best = (monitor(self), self.params.clone(), 0usize);
        let mut since_best = 0;
        let mut epochs = 0;
        for epoch in 1..=cfg.max_epochs {
            epochs = epoch;
            order.shuffle(&mut rng);
            for (b, chunk) in order.chunks(cfg.batch_size.max(1)).enumerate() {
                let bx: Vec<&[f64]> = chunk.iter().map(|&i| xs[i].as_slice()).collect();
                let by: Vec<f64> = chunk.iter().map(|&i| ys[i]).collect();
                let (loss, g) = self.batch_gradient(&bx, &by);
                if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "non-finite loss {loss} at epoch {epoch}, batch {b} (lr {})",
                        cfg.learning_rate
                    )));
                }
                self.adam_step(&g, cfg.learning_rate);
            }
            let v = monitor(self);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("validation loss {v} at epoch {epoch}")));
            }
            if v < best.0 {
                best = (v, self.params.clone(), epoch);
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
        }
        self.params = best.1;
        Ok(TrainSummary {
            epochs_run: epochs,
            best_epoch: best.2,
            best_val_loss: best.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 200,
            batch_size: 64,
            patience: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Largest relative deviation between analytic and central-difference
/// gradients at one sample, with `rel = |a−n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(net: &QuantileNet, x: &[f64], y: f64, eps: f64) -> f64 {
    let (_, analytic) = net.backward(x, y);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for k in 0..net.n_params() {
        let p0 = net.params[k];
        probe.params[k] = p0 + eps;
        let up = probe.loss(x, y);
        probe.params[k] = p0 - eps;
        let down = probe.loss(x, y);
        probe.params[k] = p0;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}
