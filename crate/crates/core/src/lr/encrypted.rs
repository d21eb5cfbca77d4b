//! Encrypted minibatch training with bootstrapping after every iteration.
//!
//! Packing: one sample `z = y·x` per ciphertext, features in the first
//! slots and zeros after. The scaled weights `v/B` and `w/B` are single
//! ciphertexts. Per iteration, for each sample:
//!
//! ```text
//! t = rotsum(z ⊙ v)          1 level
//! s = ½ − a1·B·t − a3·B³·t³  2 levels
//! g = s ⊙ z                  1 level
//! ```
//!
//! then `G = Σ g` and one constant multiplication for each of the two
//! weight updates, five levels in total.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::data::Dataset;
use super::model::*;
use crate::bootstrap::{BootstrapConfig, BootstrapKeys, Bootstrapper};
use crate::ckks::{decrypt_decode, encode_real, encrypt_sk, galois_for_rotation, Ciphertext, Evaluator, KeyGenerator, SecretKey};
use crate::error::{Error, Result};
use crate::params::Context;
use crate::perf::estimate::comm_seconds;
use crate::perf::HardwareProfile;

/// Multiplicative depth of one training iteration.
pub const LEVELS_PER_ITERATION: usize = 5;

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub gamma: f64,
    pub eta: f64,
    /// Limbs of `v` when the iteration starts and once the update is done.
    pub start_limbs: usize,
    pub end_limbs: usize,
    pub levels_consumed: usize,
    pub encrypted_loss: f64,
    pub shadow_loss: f64,
    /// Largest slot difference between decrypted and shadow weights.
    pub max_weight_error: f64,
    pub compute_s: f64,
    pub bootstrap_s: f64,
    /// Modeled inter-device exchange time for this iteration.
    pub comm_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LrReport {
    pub log: Vec<IterationLog>,
    pub weights: Vec<f64>,
    pub shadow_weights: Vec<f64>,
    pub holdout_accuracy: f64,
    pub shadow_holdout_accuracy: f64,
    /// Fraction of holdout samples where both models predict the same label.
    pub agreement: f64,
    pub total_depth: usize,
    pub range: ShadowRange,
}

impl LrReport {
    pub fn max_loss_gap(&self) -> f64 {
        self.log.iter().map(|l| (l.encrypted_loss - l.shadow_loss).abs()).fold(0.0, f64::max)
    }
}

/// Keys and bootstrapper for one training run. Holds the secret key so
/// the run can be audited against the shadow.
pub struct EncryptedTrainer<'a> {
    ctx: &'a Context,
    cfg: LrConfig,
    sig: SigmoidPoly,
    boot: Bootstrapper<'a>,
    keys: BootstrapKeys,
    sk: SecretKey,
    rng: ChaCha20Rng,
}

impl<'a> EncryptedTrainer<'a> {
    pub fn new(ctx: &'a Context, cfg: LrConfig) -> Result<Self> {
        cfg.validate()?;
        let bcfg = BootstrapConfig::new(ctx.params(), cfg.slots);
        let boot = Bootstrapper::new(ctx, bcfg)?;
        let available = ctx.q_limbs() - boot.config().depth();
        if available < LEVELS_PER_ITERATION + 2 {
            return Err(Error::LevelUnderflow {
                needed: LEVELS_PER_ITERATION + 2,
                available,
            });
        }
        let mut kg = KeyGenerator::new(ctx, cfg.seed);
        let sk = kg.secret_key();
        let extra: Vec<usize> = rotation_steps(cfg.slots)
            .map(|k| galois_for_rotation(ctx.n(), k as isize))
            .collect();
        let keys = boot.generate_keys(&mut kg, &sk, &extra);
        let rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        Ok(Self {
            ctx,
            sig: cfg.sigmoid(),
            cfg,
            boot,
            keys,
            sk,
            rng,
        })
    }

    pub fn config(&self) -> &LrConfig {
        &self.cfg
    }

    fn encrypt(&mut self, values: &[f64], scale: f64, limbs: usize) -> Result<Ciphertext> {
        let pt = encode_real(self.ctx, values, scale, limbs)?;
        encrypt_sk(self.ctx, &self.sk, &pt, &mut self.rng)
    }

    fn decrypt(&self, ct: &Ciphertext) -> Result<Vec<f64>> {
        Ok(decrypt_decode(self.ctx, &self.sk, ct)?.iter().map(|c| c.re).collect())
    }

    /// Trains on `train`, comparing each iteration against the shadow, and
    /// scores both models on `holdout`.
    pub fn train(&mut self, train: &Dataset, holdout: &Dataset) -> Result<LrReport> {
        train.validate(self.cfg.features)?;
        holdout.validate(self.cfg.features)?;
        if train.is_empty() {
            return Err(Error::Dataset("empty training set".into()));
        }
        let cfg = self.cfg.clone();
        // Bootstrapping needs every scaled weight inside [−1, 1].
        let (_, planned) = train_shadow(&cfg, train)?;
        if planned.max_abs_weight >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "scaled weights reach {:.3}; raise weight_bound above {:.3}",
                planned.max_abs_weight,
                planned.max_abs_weight * cfg.weight_bound
            )));
        }
        let start_limbs = self.ctx.q_limbs() - self.boot.config().depth();
        let in_scale = self.boot.config().input_scale(self.ctx);
        let hw = HardwareProfile::default();

        let zeros = vec![0.0; cfg.slots];
        let mut v = self.encrypt(&zeros, self.ctx.params().scale, start_limbs)?;
        let mut w_old = v.clone();
        let mut shadow = ShadowState::zeros(cfg.slots);
        let mut range = ShadowRange::default();
        let mut log = Vec::with_capacity(cfg.iterations);

        for (t, (gamma, eta)) in nesterov_schedule(&cfg).into_iter().enumerate() {
            let rows = minibatch_rows(t, cfg.minibatch, train.len());
            let samples: Vec<Vec<f64>> = rows.iter().map(|&r| packed_sample(train, r, cfg.slots)).collect();
            let timer = Instant::now();
            let begin = v.limbs();
            let (w_new, v_pre) = self.step(&v, &samples, gamma, eta, in_scale)?;
            let end_limbs = v_pre.limbs();
            // η·w_old joins at the bootstrapping level.
            let ev = Evaluator::new(self.ctx, &self.keys.core);
            let mut carry = ev.mul_const(&w_old, Complex64::new(eta, 0.0), in_scale)?;
            carry.drop_to(1);
            let mut v_low = v_pre;
            v_low.drop_to(1);
            let v_next = ev.add(&v_low, &carry)?;
            let compute_s = timer.elapsed().as_secs_f64();

            let timer = Instant::now();
            v = self.boot.bootstrap(&self.keys, &v_next)?;
            let bootstrap_s = timer.elapsed().as_secs_f64();
            w_old = w_new;

            shadow = shadow_step(&cfg, &self.sig, &shadow, &samples, (gamma, eta), &mut range);
            let dec_w = self.decrypt(&w_old)?;
            let dec_v = self.decrypt(&v)?;
            let err = dec_w
                .iter()
                .zip(&shadow.w)
                .chain(dec_v.iter().zip(&shadow.v))
                .map(|(a, b)| (a - b).abs() * cfg.weight_bound)
                .fold(0.0, f64::max);
            let enc_weights: Vec<f64> = dec_w[..cfg.features].iter().map(|x| x * cfg.weight_bound).collect();
            log.push(IterationLog {
                iteration: t,
                gamma,
                eta,
                start_limbs: begin,
                end_limbs,
                levels_consumed: begin - end_limbs,
                encrypted_loss: logistic_loss(train, &enc_weights),
                shadow_loss: logistic_loss(train, &shadow.weights(&cfg)),
                max_weight_error: err,
                compute_s,
                bootstrap_s,
                comm_s: if cfg.devices > 1 { comm_seconds(cfg.devices, 2, &hw) } else { 0.0 },
            });
        }
        let dec_w = self.decrypt(&w_old)?;
        let weights: Vec<f64> = dec_w[..cfg.features].iter().map(|x| x * cfg.weight_bound).collect();
        let shadow_weights = shadow.weights(&cfg);
        Ok(LrReport {
            total_depth: log.iter().map(|l| l.levels_consumed).sum(),
            holdout_accuracy: accuracy(holdout, &weights),
            shadow_holdout_accuracy: accuracy(holdout, &shadow_weights),
            agreement: agreement(holdout, &weights, &shadow_weights),
            weights,
            shadow_weights,
            log,
            range,
        })
    }

    /// One gradient step on the scaled weights. Returns `(w_new, v_pre)`
    /// where `v_pre = (1 − η)·w_new`, both at scale `out_scale`.
    fn step(
        &mut self,
        v: &Ciphertext,
        samples: &[Vec<f64>],
        gamma: f64,
        eta: f64,
        out_scale: f64,
    ) -> Result<(Ciphertext, Ciphertext)> {
        let limbs = v.limbs();
        if limbs < LEVELS_PER_ITERATION + 2 {
            return Err(Error::LevelUnderflow {
                needed: LEVELS_PER_ITERATION + 2,
                available: limbs,
            });
        }
        let scale = self.ctx.params().scale;
        let cts = samples
            .iter()
            .map(|z| self.encrypt(z, scale, limbs))
            .collect::<Result<Vec<_>>>()?;
        let ev = Evaluator::new(self.ctx, &self.keys.core);

        // Contiguous shares per device, summed in device order.
        let share = cts.len().div_ceil(self.cfg.devices);
        let mut total: Option<Ciphertext> = None;
        for part in cts.chunks(share) {
            let mut acc: Option<Ciphertext> = None;
            for z in part {
                let g = self.sample_gradient(&ev, v, z)?;
                acc = Some(match acc {
                    None => g,
                    Some(a) => ev.add(&a, &g)?,
                });
            }
            if let Some(p) = acc {
                total = Some(match total {
                    None => p,
                    Some(a) => ev.add(&a, &p)?,
                });
            }
        }
        let g = total.ok_or_else(|| Error::Dataset("empty minibatch".into()))?;

        let c = gamma / (samples.len() as f64 * self.cfg.weight_bound);
        let re = |x: f64| Complex64::new(x, 0.0);
        let land = |ct: Ciphertext, at: usize| -> Ciphertext {
            let mut ct = ct;
            ct.drop_to(at);
            ct
        };
        let w_step = ev.mul_const(&g, re(c), out_scale)?;
        let v_step = ev.mul_const(&g, re((1.0 - eta) * c), out_scale)?;
        let at = w_step.limbs();
        let w_base = land(ev.mul_const(v, re(1.0), out_scale)?, at);
        let v_base = land(ev.mul_const(v, re(1.0 - eta), out_scale)?, at);
        Ok((ev.add(&w_base, &w_step)?, ev.add(&v_base, &v_step)?))
    }

    /// `σ(−z·v)·z` for one encrypted sample.
    fn sample_gradient(&self, ev: &Evaluator, v: &Ciphertext, z: &Ciphertext) -> Result<Ciphertext> {
        let b = self.cfg.weight_bound;
        let target = self.ctx.params().scale;
        let re = |x: f64| Complex64::new(x, 0.0);

        let mut t = ev.mul(z, v)?;
        for k in rotation_steps(self.cfg.slots) {
            let r = ev.rotate(&t, k as isize)?;
            t = ev.add(&t, &r)?;
        }
        // 1 − σ(B·t) = ½ − a1·B·t − a3·B³·t³
        let t2 = ev.square(&t)?;
        let t3_target = target;
        let c3_scale = t3_target * self.ctx.q(t2.limbs() - 1) as f64 / t2.scale;
        let c3t = ev.mul_const(&t, re(-self.sig.a3 * b * b * b), c3_scale)?;
        let t3 = ev.mul(&t2, &c3t)?;
        let mut lin = ev.mul_const(&t, re(-self.sig.a1 * b), t3.scale)?;
        lin.drop_to(t3.limbs());
        let s = ev.add_const(&ev.add(&t3, &lin)?, re(0.5))?;

        let mut zl = z.clone();
        zl.drop_to(s.limbs());
        ev.mul(&s, &zl)
    }
}

/// Rotation amounts of a full rotate-and-sum over `slots`.
pub fn rotation_steps(slots: usize) -> impl Iterator<Item = usize> {
    (0..slots.trailing_zeros()).map(|i| 1usize << i)
}
