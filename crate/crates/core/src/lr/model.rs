//! Polynomial sigmoid, Nesterov schedule and the plaintext shadow trainer.

use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{Error, Result};

/// `σ(x) ≈ 0.5 + a1·x + a3·x³`, fitted by least squares on `[−bound, bound]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidPoly {
    pub a1: f64,
    pub a3: f64,
    pub bound: f64,
}

impl SigmoidPoly {
    /// Continuous least-squares fit of the degree-3 polynomial. `σ − ½` is
    /// odd, so the even coefficients beyond the constant vanish and only
    /// the odd normal equations remain; they are integrated numerically.
    pub fn least_squares(bound: f64) -> Self {
        let steps = 20_000;
        let h = bound / steps as f64;
        let (mut m11, mut m13, mut m33, mut r1, mut r3) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..=steps {
            let x = i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let f = 1.0 / (1.0 + (-x).exp()) - 0.5;
            m11 += w * x * x;
            m13 += w * x.powi(4);
            m33 += w * x.powi(6);
            r1 += w * x * f;
            r3 += w * x.powi(3) * f;
        }
        let det = m11 * m33 - m13 * m13;
        Self {
            a1: (r1 * m33 - r3 * m13) / det,
            a3: (m11 * r3 - m13 * r1) / det,
            bound,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        0.5 + self.a1 * x + self.a3 * x * x * x
    }
}

/// Training hyperparameters shared by the encrypted run and its shadow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub minibatch: usize,
    pub iterations: usize,
    /// Step size at iteration `t` is `learning_rate / (t + 1)`.
    pub learning_rate: f64,
    /// Weights are carried divided by this bound so every slot stays in
    /// `[−1, 1]` for bootstrapping.
    pub weight_bound: f64,
    pub sigmoid_bound: f64,
    pub slots: usize,
    pub features: usize,
    pub devices: usize,
    pub seed: u64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            minibatch: 1024,
            iterations: 30,
            learning_rate: 1.0,
            weight_bound: 4.0,
            sigmoid_bound: 8.0,
            slots: 256,
            features: super::data::FEATURES,
            devices: 1,
            seed: 1,
        }
    }
}

impl LrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.features > self.slots {
            return bad(format!("{} features do not fit {} slots", self.features, self.slots));
        }
        if !self.slots.is_power_of_two() {
            return bad(format!("slot count {} is not a power of two", self.slots));
        }
        if self.minibatch == 0 || self.iterations == 0 || self.devices == 0 {
            return bad("minibatch, iterations and devices must be positive".into());
        }
        if !(self.weight_bound > 0.0 && self.learning_rate > 0.0 && self.sigmoid_bound > 0.0) {
            return bad("bounds and learning rate must be positive".into());
        }
        Ok(())
    }

    pub fn sigmoid(&self) -> SigmoidPoly {
        SigmoidPoly::least_squares(self.sigmoid_bound)
    }
}

/// Per-iteration constants: step size γ and momentum weight η, with
/// `w' = v + γ·grad` and `v' = (1 − η)·w' + η·w`.
pub fn nesterov_schedule(cfg: &LrConfig) -> Vec<(f64, f64)> {
    let mut lambda = 1.0f64;
    (0..cfg.iterations)
        .map(|t| {
            let next = (1.0 + (1.0 + 4.0 * lambda * lambda).sqrt()) / 2.0;
            let eta = (1.0 - lambda) / next;
            lambda = next;
            (cfg.learning_rate / (t + 1) as f64, eta)
        })
        .collect()
}

/// Minibatch rows of iteration `t`, cycling through the training set.
pub fn minibatch_rows(t: usize, minibatch: usize, train: usize) -> Vec<usize> {
    (0..minibatch.min(train)).map(|k| (t * minibatch + k) % train).collect()
}

/// `y·x` zero-padded to `slots`.
pub fn packed_sample(ds: &Dataset, row: usize, slots: usize) -> Vec<f64> {
    let mut z = vec![0.0; slots];
    let y = ds.labels[row] as f64;
    for (d, &x) in z.iter_mut().zip(&ds.features[row]) {
        *d = y * x;
    }
    z
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean of `log(1 + exp(−y·w·x))`.
pub fn logistic_loss(ds: &Dataset, w: &[f64]) -> f64 {
    let total: f64 = ds
        .features
        .iter()
        .zip(&ds.labels)
        .map(|(x, &y)| {
            let m = -(y as f64) * dot(w, x);
            // log1p(exp(m)) without overflow
            if m > 0.0 {
                m + (-m).exp().ln_1p()
            } else {
                m.exp().ln_1p()
            }
        })
        .sum();
    total / ds.len().max(1) as f64
}

pub fn predict(w: &[f64], x: &[f64]) -> i8 {
    if dot(w, x) >= 0.0 {
        1
    } else {
        -1
    }
}

pub fn accuracy(ds: &Dataset, w: &[f64]) -> f64 {
    let hits = ds.features.iter().zip(&ds.labels).filter(|(x, &y)| predict(w, x) == y).count();
    hits as f64 / ds.len().max(1) as f64
}

/// Fraction of samples on which two weight vectors predict the same label.
pub fn agreement(ds: &Dataset, a: &[f64], b: &[f64]) -> f64 {
    let same = ds.features.iter().filter(|x| predict(a, x) == predict(b, x)).count();
    same as f64 / ds.len().max(1) as f64
}

/// Scaled weight state `(w/B, v/B)` over all slots.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowState {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

impl ShadowState {
    pub fn zeros(slots: usize) -> Self {
        Self {
            w: vec![0.0; slots],
            v: vec![0.0; slots],
        }
    }

    /// Unscaled weights restricted to the feature slots.
    pub fn weights(&self, cfg: &LrConfig) -> Vec<f64> {
        self.w[..cfg.features].iter().map(|x| x * cfg.weight_bound).collect()
    }
}

/// Largest inner product and scaled weight seen by the shadow.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ShadowRange {
    pub max_abs_inner: f64,
    pub max_abs_weight: f64,
}

/// One cleartext iteration computing exactly what the encrypted circuit
/// computes: `t = z·v/B`, `s = σ(−B·t)`, `G = Σ s·z`, then the momentum
/// update on the scaled weights.
pub fn shadow_step(
    cfg: &LrConfig,
    sig: &SigmoidPoly,
    state: &ShadowState,
    samples: &[Vec<f64>],
    (gamma, eta): (f64, f64),
    range: &mut ShadowRange,
) -> ShadowState {
    let b = cfg.weight_bound;
    let mut g = vec![0.0; cfg.slots];
    for z in samples {
        let t = dot(z, &state.v);
        range.max_abs_inner = range.max_abs_inner.max((b * t).abs());
        let s = 1.0 - sig.eval(b * t);
        for (gi, zi) in g.iter_mut().zip(z) {
            *gi += s * zi;
        }
    }
    let c = gamma / (samples.len() as f64 * b);
    let w_new: Vec<f64> = state.v.iter().zip(&g).map(|(v, g)| v + c * g).collect();
    let v_new: Vec<f64> = w_new.iter().zip(&state.w).map(|(wn, wo)| (1.0 - eta) * wn + eta * wo).collect();
    let peak = v_new.iter().chain(&w_new).fold(0.0f64, |m, x| m.max(x.abs()));
    range.max_abs_weight = range.max_abs_weight.max(peak);
    ShadowState { w: w_new, v: v_new }
}

/// Full cleartext training run; returns the state after each iteration.
pub fn train_shadow(cfg: &LrConfig, train: &Dataset) -> Result<(Vec<ShadowState>, ShadowRange)> {
    cfg.validate()?;
    train.validate(cfg.features)?;
    if train.is_empty() {
        return Err(Error::Dataset("empty training set".into()));
    }
    let sig = cfg.sigmoid();
    let mut state = ShadowState::zeros(cfg.slots);
    let mut range = ShadowRange::default();
    let mut out = Vec::with_capacity(cfg.iterations);
    for (t, step) in nesterov_schedule(cfg).into_iter().enumerate() {
        let rows = minibatch_rows(t, cfg.minibatch, train.len());
        let samples: Vec<Vec<f64>> = rows.iter().map(|&r| packed_sample(train, r, cfg.slots)).collect();
        state = shadow_step(cfg, &sig, &state, &samples, step, &mut range);
        out.push(state.clone());
    }
    Ok((out, range))
}
