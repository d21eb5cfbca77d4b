//! CKKS bootstrapping: ModRaise, CoeffToSlot, EvalMod, SlotToCoeff.

pub mod chebyshev;
pub mod lintrans;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ckks::{
    galois_for_conjugation, galois_for_rotation, Ciphertext, EvalKeys, Evaluator, KeyGenerator,
    SecretKey,
};
use crate::error::{Error, Result};
use crate::keyswitch::{Datapath, OpCounters, SwitchingKey};
use crate::params::{Context, SchemeParams};
use crate::poly::Poly;
use crate::rns::pow_mod;

pub use chebyshev::Chebyshev;
pub use lintrans::DiagMatrix;

/// Which secret the bootstrapping circuit runs under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoreSecret {
    /// Switch back to the dense secret right after ModRaise.
    Dense,
    /// Stay under the sparse secret until SlotToCoeff is done.
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Slot count `n` of the ciphertexts to refresh.
    pub slots: usize,
    pub fft_iter: usize,
    /// EvalMod input range: `|m/q_0 + I| < k_range`.
    pub k_range: f64,
    pub eval_degree: usize,
    /// Arcsine series terms applied to the sine; 1 is the plain scaled sine.
    pub arcsine_terms: usize,
    /// Hamming weight of the temporary sparse secret used around ModRaise; 0 disables it.
    pub sparse_weight: usize,
    pub core_secret: CoreSecret,
    /// `q_0 / Δ` for ciphertexts entering bootstrapping.
    pub input_ratio: f64,
    /// Scale at the EvalMod input.
    pub eval_scale: f64,
    /// Scale of the refreshed ciphertext.
    pub output_scale: f64,
}

impl BootstrapConfig {
    pub fn new(params: &SchemeParams, slots: usize) -> Self {
        Self {
            slots,
            fft_iter: params.fft_iter,
            k_range: 6.0,
            eval_degree: 511,
            arcsine_terms: 5,
            sparse_weight: 12,
            core_secret: CoreSecret::Dense,
            input_ratio: 2.0,
            eval_scale: 2f64.powi(params.limb_bits as i32),
            output_scale: params.scale,
        }
    }

    /// Levels consumed: two linear transforms plus EvalMod.
    pub fn depth(&self) -> usize {
        2 * self.fft_iter + chebyshev_depth(self.eval_degree)
    }

    /// Scale to give a ciphertext before it reaches the last limb.
    pub fn input_scale(&self, ctx: &Context) -> f64 {
        ctx.q(0) as f64 / self.input_ratio
    }
}

fn chebyshev_depth(degree: usize) -> usize {
    Chebyshev {
        coeffs: vec![0.0; degree + 1],
    }
    .depth()
}

/// `(1/2π) Σ_t a_t sin(2πx)^{2t+1}` with the arcsine Taylor coefficients
/// `a_t`; close to `x − round(x)` near integers.
pub fn eval_mod_target(x: f64, terms: usize) -> f64 {
    let s = (2.0 * PI * x).sin();
    let s2 = s * s;
    let (mut acc, mut a, mut p) = (0.0, 1.0, s);
    for t in 0..terms.max(1) {
        acc += a * p;
        let t = t as f64;
        a *= (2.0 * t + 1.0) * (2.0 * t + 1.0) / ((2.0 * t + 2.0) * (2.0 * t + 3.0));
        p *= s2;
    }
    acc / (2.0 * PI)
}

/// Mean of `-log2 |expected - got|` over slots.
pub fn precision_bits(expected: &[Complex64], got: &[Complex64]) -> f64 {
    let n = expected.len().min(got.len()).max(1);
    expected
        .iter()
        .zip(got)
        .map(|(a, b)| -(a - b).norm().max(2f64.powi(-60)).log2())
        .sum::<f64>()
        / n as f64
}

/// `(T_boot + Σ_{i=1..ℓ} T_mult(i)) / (ℓ n)`; `t_mult[i-1]` is the
/// multiplication time at level `i`.
pub fn amortized_mult_time(t_boot: f64, t_mult: &[f64], levels: usize, slots: usize) -> Result<f64> {
    if levels == 0 || slots == 0 {
        return Err(Error::InvalidParams("amortized time needs ℓ ≥ 1 and n ≥ 1".into()));
    }
    if t_mult.len() < levels {
        return Err(Error::InvalidParams(format!(
            "{} multiplication times for {levels} levels",
            t_mult.len()
        )));
    }
    let total: f64 = t_boot + t_mult[..levels].iter().sum::<f64>();
    Ok(total / (levels * slots) as f64)
}

/// Keys used by [`Bootstrapper::bootstrap`].
#[derive(Clone, Debug)]
pub struct BootstrapKeys {
    /// Relinearization and Galois keys under the core secret.
    pub core: EvalKeys,
    pub to_sparse: Option<SwitchingKey>,
    pub to_dense: Option<SwitchingKey>,
}

/// Wall-clock time and counters per bootstrapping phase.
#[derive(Clone, Debug, Default)]
pub struct BootstrapTrace {
    pub phases: Vec<(&'static str, Duration)>,
    pub counters: OpCounters,
    pub keyswitches: u64,
}

impl BootstrapTrace {
    pub fn total(&self) -> Duration {
        self.phases.iter().map(|p| p.1).sum()
    }
}

/// Precomputed transform plans and EvalMod polynomial for one slot count.
pub struct Bootstrapper<'a> {
    ctx: &'a Context,
    cfg: BootstrapConfig,
    cts: Vec<DiagMatrix>,
    stc: Vec<DiagMatrix>,
    poly: Chebyshev,
}

impl<'a> Bootstrapper<'a> {
    pub fn new(ctx: &'a Context, cfg: BootstrapConfig) -> Result<Self> {
        let n = cfg.slots;
        let half = ctx.n() / 2;
        if !n.is_power_of_two() || n > half {
            return Err(Error::InvalidParams(format!("{n} slots with ring degree {}", ctx.n())));
        }
        if cfg.fft_iter == 0 {
            return Err(Error::InvalidParams("fft_iter must be positive".into()));
        }
        if cfg.sparse_weight > ctx.n() {
            return Err(Error::InvalidParams(format!("sparse weight {} > N", cfg.sparse_weight)));
        }
        if cfg.core_secret == CoreSecret::Sparse && cfg.sparse_weight == 0 {
            return Err(Error::InvalidParams("sparse core needs a sparse weight".into()));
        }
        if ctx.q_limbs() <= cfg.depth() {
            return Err(Error::InvalidParams(format!(
                "bootstrapping depth {} needs more than {} limbs",
                cfg.depth(),
                ctx.q_limbs()
            )));
        }
        let k = cfg.k_range;
        let terms = cfg.arcsine_terms;
        let poly = Chebyshev::interpolate(|u| eval_mod_target(k * u, terms), cfg.eval_degree);
        let (cts, stc) = plans(n, half, cfg.fft_iter);
        Ok(Self {
            ctx,
            cfg,
            cts,
            stc,
            poly,
        })
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.cfg
    }

    pub fn eval_poly(&self) -> &Chebyshev {
        &self.poly
    }

    pub fn coeff_to_slot_plan(&self) -> &[DiagMatrix] {
        &self.cts
    }

    pub fn slot_to_coeff_plan(&self) -> &[DiagMatrix] {
        &self.stc
    }

    fn is_sparse(&self) -> bool {
        self.cfg.slots < self.ctx.n() / 2
    }

    fn gap(&self) -> usize {
        self.ctx.n() / (2 * self.cfg.slots)
    }

    fn sub_sum_elements(&self) -> Vec<usize> {
        let two_n = 2 * self.ctx.n() as u64;
        (0..self.gap().trailing_zeros())
            .map(|i| pow_mod(5, (self.cfg.slots << i) as u64, two_n) as usize)
            .collect()
    }

    /// Every Galois element the circuit uses.
    pub fn galois_elements(&self) -> Vec<usize> {
        let n = self.ctx.n();
        let mut out: std::collections::BTreeSet<usize> = self.sub_sum_elements().into_iter().collect();
        out.insert(galois_for_conjugation(n));
        for m in self.cts.iter().chain(&self.stc) {
            for d in m.offsets().into_iter().filter(|&d| d != 0) {
                out.insert(galois_for_rotation(n, -(d as isize)));
            }
        }
        out.into_iter().collect()
    }

    /// Core keys plus the sparse-secret switching pair. `extra` Galois
    /// elements are generated under the core secret as well.
    pub fn generate_keys(&self, kg: &mut KeyGenerator, sk: &SecretKey, extra: &[usize]) -> BootstrapKeys {
        let sparse = (self.cfg.sparse_weight > 0).then(|| kg.sparse_secret_key(self.cfg.sparse_weight));
        self.generate_keys_with(kg, sk, sparse.as_ref(), extra)
    }

    /// [`Self::generate_keys`] with a caller-chosen sparse secret.
    pub fn generate_keys_with(
        &self,
        kg: &mut KeyGenerator,
        sk: &SecretKey,
        sparse: Option<&SecretKey>,
        extra: &[usize],
    ) -> BootstrapKeys {
        let mut elements = self.galois_elements();
        elements.extend_from_slice(extra);
        elements.sort_unstable();
        elements.dedup();
        let core_sk = match (self.cfg.core_secret, sparse) {
            (CoreSecret::Sparse, Some(sp)) => sp,
            _ => sk,
        };
        let core = kg.eval_keys(core_sk, &elements);
        let to_sparse = sparse.map(|sp| kg.switching_key(&sk.poly, sp));
        let to_dense = sparse.map(|sp| kg.switching_key(&sp.poly, sk));
        BootstrapKeys {
            core,
            to_sparse,
            to_dense,
        }
    }

    /// Fails with every missing key listed.
    pub fn check_keys(&self, keys: &BootstrapKeys) -> Result<()> {
        let missing: Vec<usize> = self
            .galois_elements()
            .into_iter()
            .filter(|g| !keys.core.galois.contains_key(g))
            .collect();
        let mut what = Vec::new();
        if !missing.is_empty() {
            what.push(format!("galois elements {missing:?}"));
        }
        if keys.core.relin.is_none() {
            what.push("relinearization".into());
        }
        if self.cfg.sparse_weight > 0 && (keys.to_sparse.is_none() || keys.to_dense.is_none()) {
            what.push("sparse-secret switching keys".into());
        }
        if what.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingKey(what.join(", ")))
        }
    }
}

fn plans(n: usize, half: usize, fft_iter: usize) -> (Vec<DiagMatrix>, Vec<DiagMatrix>) {
    let mut cts = lintrans::group_stages(&lintrans::coeff_to_slot_stages(n), fft_iter, n);
    let mut stc = lintrans::group_stages(&lintrans::slot_to_coeff_stages(n), fft_iter, n);
    let last = cts.len() - 1;
    if n < half {
        // Work in the 2n-slot view where the n-slot vector appears twice.
        let m = 2 * n;
        cts = cts.iter().map(DiagMatrix::duplicate).collect();
        stc = stc.iter().map(DiagMatrix::duplicate).collect();
        // Real part into the first half, imaginary part into the second
        // once the conjugate is added.
        let split: Vec<Complex64> = (0..m)
            .map(|k| if k < n { Complex64::new(0.5, 0.0) } else { Complex64::new(0.0, -0.5) })
            .collect();
        cts[last] = cts[last].scale_rows(&split);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let mut merge = std::collections::BTreeMap::new();
        merge.insert(0, (0..m).map(|k| if k < n { one } else { i }).collect());
        merge.insert(n, (0..m).map(|k| if k < n { i } else { one }).collect());
        stc[0] = stc[0].mul(&DiagMatrix::from_diags(m, merge));
    } else {
        cts[last] = cts[last].scale(Complex64::new(0.5, 0.0));
    }
    (cts, stc)
}

impl Bootstrapper<'_> {
    /// Re-expresses the last-limb residues over the whole chain. The
    /// encrypted polynomial becomes `m + q_0·I`.
    pub fn mod_raise(&self, ct: &Ciphertext) -> Ciphertext {
        let ctx = self.ctx;
        let ring = ctx.ring();
        let basis = ctx.q_basis(ctx.q_limbs());
        let raise = |p: &Poly| {
            let mut limb = p.limbs[0].clone();
            ring.intt_limb(&mut limb, 0);
            let m = ring.modulus(0);
            let v: Vec<i64> = limb.iter().map(|&x| m.center(x)).collect();
            ring.to_eval(ring.from_signed(&v, &basis))
        };
        Ciphertext {
            c0: raise(&ct.c0),
            c1: raise(&ct.c1),
            scale: ct.scale,
            slots: ct.slots,
        }
    }

    /// Trace onto the `n`-slot subring: keeps coefficients at multiples of
    /// `N/(2n)`, multiplied by `N/(2n)`, and zeroes the rest.
    pub fn sub_sum(&self, ev: &Evaluator, ct: &Ciphertext) -> Result<Ciphertext> {
        let mut x = ct.clone();
        for g in self.sub_sum_elements() {
            x = ev.add(&x, &ev.apply_galois(&x, g)?)?;
        }
        Ok(x)
    }

    /// Homomorphic `U^{-1}` in `fft_iter` levels followed by the real and
    /// imaginary split. Returns one ciphertext with `2n` real slots when
    /// sparse, or the real and imaginary halves when fully packed.
    pub fn coeff_to_slot(&self, ev: &Evaluator, ct: &Ciphertext) -> Result<Vec<Ciphertext>> {
        if ct.limbs() <= self.cts.len() {
            return Err(Error::NeedsBootstrapping {
                op: "CoeffToSlot",
                limbs: ct.limbs(),
            });
        }
        let step = (self.cfg.eval_scale / ct.scale).powf(1.0 / self.cts.len() as f64);
        let (last, head) = self.cts.split_last().expect("at least one group");
        let mut x = ct.clone();
        for m in head {
            let pt_scale = self.ctx.q(x.limbs() - 1) as f64 * step;
            x = m.apply_encrypted(ev, &x, pt_scale)?;
        }
        // Conjugate before the final rescale to keep its key-switching noise small.
        let pt_scale = self.ctx.q(x.limbs() - 1) as f64 * step;
        let y = last.apply_unrescaled(ev, &x, pt_scale)?;
        let conj = ev.conjugate(&y)?;
        let mut parts = if self.is_sparse() {
            vec![ev.add(&y, &conj)?]
        } else {
            vec![ev.add(&y, &conj)?, ev.mul_i(&ev.sub(&conj, &y)?)]
        };
        for p in &mut parts {
            ev.rescale_assign(p)?;
            p.scale = self.cfg.eval_scale;
        }
        Ok(parts)
    }

    /// Evaluates the EvalMod polynomial; output scale is `target_scale`.
    pub fn eval_mod(&self, ev: &Evaluator, ct: &Ciphertext, target_scale: f64) -> Result<Ciphertext> {
        chebyshev::evaluate(ev, ct, &self.poly, target_scale)
    }

    /// Homomorphic `U` in `fft_iter` levels; inverse of [`Self::coeff_to_slot`].
    pub fn slot_to_coeff(&self, ev: &Evaluator, parts: &[Ciphertext]) -> Result<Ciphertext> {
        self.slot_to_coeff_then_switch(ev, parts, None)
    }

    /// SlotToCoeff with an optional key switch applied before the last rescale.
    fn slot_to_coeff_then_switch(
        &self,
        ev: &Evaluator,
        parts: &[Ciphertext],
        key: Option<&SwitchingKey>,
    ) -> Result<Ciphertext> {
        let mut x = match parts {
            [one] => one.clone(),
            [re, im] => ev.add(re, &ev.mul_i(im))?,
            _ => return Err(Error::InvalidParams("SlotToCoeff takes one or two ciphertexts".into())),
        };
        if x.limbs() <= self.stc.len() {
            return Err(Error::NeedsBootstrapping {
                op: "SlotToCoeff",
                limbs: x.limbs(),
            });
        }
        let (last, head) = self.stc.split_last().expect("at least one group");
        for m in head {
            let pt_scale = self.ctx.q(x.limbs() - 1) as f64;
            x = m.apply_encrypted(ev, &x, pt_scale)?;
        }
        let pt_scale = self.ctx.q(x.limbs() - 1) as f64;
        let mut x = last.apply_unrescaled(ev, &x, pt_scale)?;
        if let Some(key) = key {
            let (b, a) = ev.switch_key(&x.c1, key)?;
            self.ctx.ring().add_assign(&mut x.c0, &b)?;
            x.c1 = a;
        }
        ev.rescale_assign(&mut x)?;
        x.slots = self.cfg.slots;
        Ok(x)
    }

    pub fn bootstrap(&self, keys: &BootstrapKeys, ct: &Ciphertext) -> Result<Ciphertext> {
        Ok(self.run(keys, ct, Datapath::Modified, None)?.0)
    }

    pub fn bootstrap_traced(
        &self,
        keys: &BootstrapKeys,
        ct: &Ciphertext,
        datapath: Datapath,
    ) -> Result<(Ciphertext, BootstrapTrace)> {
        self.run(keys, ct, datapath, None)
    }

    /// Like [`Self::bootstrap`], but decrypts the EvalMod input with the core
    /// secret and fails if any slot leaves `[-1, 1]`.
    pub fn bootstrap_checked(&self, keys: &BootstrapKeys, ct: &Ciphertext, core_sk: &SecretKey) -> Result<Ciphertext> {
        Ok(self.run(keys, ct, Datapath::Modified, Some(core_sk))?.0)
    }

    fn run(
        &self,
        keys: &BootstrapKeys,
        ct: &Ciphertext,
        datapath: Datapath,
        probe: Option<&SecretKey>,
    ) -> Result<(Ciphertext, BootstrapTrace)> {
        self.check_keys(keys)?;
        if ct.slots != self.cfg.slots {
            return Err(Error::InvalidParams(format!(
                "bootstrapper built for {} slots, ciphertext has {}",
                self.cfg.slots, ct.slots
            )));
        }
        let ctx = self.ctx;
        let ring = ctx.ring();
        let ev = Evaluator::new(ctx, &keys.core).with_datapath(datapath);
        let mut trace = BootstrapTrace::default();
        let mut clock = Instant::now();
        let mut lap = |name: &'static str, trace: &mut BootstrapTrace| {
            trace.phases.push((name, clock.elapsed()));
            clock = Instant::now();
        };

        let mut x = ct.clone();
        x.drop_to(1);
        let delta_in = x.scale;
        if let Some(key) = &keys.to_sparse {
            let (b, a) = ev.switch_key(&x.c1, key)?;
            ring.add_assign(&mut x.c0, &b)?;
            x.c1 = a;
        }
        let mut x = self.mod_raise(&x);
        if let (CoreSecret::Dense, Some(key)) = (self.cfg.core_secret, &keys.to_dense) {
            let (b, a) = ev.switch_key(&x.c1, key)?;
            ring.add_assign(&mut x.c0, &b)?;
            x.c1 = a;
        }
        let q0 = ctx.q(0) as f64;
        x.scale = self.cfg.k_range * q0 * self.gap() as f64;
        lap("mod_raise", &mut trace);

        let x = self.sub_sum(&ev, &x)?;
        lap("sub_sum", &mut trace);

        let parts = self.coeff_to_slot(&ev, &x)?;
        lap("coeff_to_slot", &mut trace);
        if let Some(sk) = probe {
            for p in &parts {
                let worst = crate::ckks::decrypt_decode(ctx, sk, p)?
                    .iter()
                    .map(|z| z.re.abs())
                    .fold(0.0, f64::max);
                if worst > 1.0 {
                    return Err(Error::EvalModRange(worst));
                }
            }
        }

        // EvalMod returns m/q_0; relabelling the scale by Δ_in/q_0 reads it as m/Δ_in.
        let eval_target = self.cfg.output_scale * q0 / delta_in;
        let parts = parts
            .iter()
            .map(|p| {
                let mut y = self.eval_mod(&ev, p, eval_target)?;
                y.scale = self.cfg.output_scale;
                Ok(y)
            })
            .collect::<Result<Vec<_>>>()?;
        lap("eval_mod", &mut trace);

        let final_key = match self.cfg.core_secret {
            CoreSecret::Sparse => keys.to_dense.as_ref(),
            CoreSecret::Dense => None,
        };
        let out = self.slot_to_coeff_then_switch(&ev, &parts, final_key)?;
        lap("slot_to_coeff", &mut trace);
        trace.counters = ev.counters();
        trace.keyswitches = ev.keyswitch_count();
        Ok((out, trace))
    }
}
