//! Hybrid key switching with a reordered datapath.
//!
//! The input polynomial is split into digits of `α` consecutive limbs. Each
//! digit is raised to the full basis `Q_ℓ ∪ P` by basis conversion and
//! multiplied against one column of the switching key; the sum is divided by
//! `P`. The per-digit gadget factor `P·Q̂_j` lives in the key, so the inner
//! product itself is plain multiply-accumulate.
//!
//! [`Datapath::Modified`] starts the inner product on the digit's own limbs
//! as soon as they are split off, converts them with shared inner products,
//! and transforms only the limbs it generated. [`Datapath::Reference`] raises
//! the whole digit first (re-transforming the source limbs) and converts with
//! per-target recomputation. Both produce the same residues.

use std::fmt;

use crate::error::{Error, Result};
use crate::params::Context;
use crate::perf::residency::{keyswitch_schedule, peak_limbs};
use crate::poly::{Poly, Representation, Ring};
use crate::rns::{BasisConverter, Modulus};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datapath {
    Reference,
    #[default]
    Modified,
}

/// Work done by key-switching calls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub ntt: u64,
    pub intt: u64,
    pub modmul: u64,
    pub key_bytes_streamed: u64,
    pub peak_onchip_bytes: u64,
}

impl OpCounters {
    pub fn merge(&mut self, other: &OpCounters) {
        self.ntt += other.ntt;
        self.intt += other.intt;
        self.modmul += other.modmul;
        self.key_bytes_streamed += other.key_bytes_streamed;
        self.peak_onchip_bytes = self.peak_onchip_bytes.max(other.peak_onchip_bytes);
    }
}

impl fmt::Display for OpCounters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ntt_count={} intt_count={} modmul_count={} key_bytes_streamed={} peak_onchip_bytes={}",
            self.ntt, self.intt, self.modmul, self.key_bytes_streamed, self.peak_onchip_bytes
        )
    }
}

/// Bytes of one limb with `bits`-bit residues packed densely.
pub fn limb_bytes(n: usize, bits: u32) -> u64 {
    (n as u64 * bits as u64).div_ceil(8)
}

/// A `2 × dnum` key: column `j` is `(b_j, a_j)` over every ciphertext limb
/// followed by the extension limbs, in evaluation form, with
/// `b_j + a_j·s = e_j + P·Q̂_j·s'`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchingKey {
    pub columns: Vec<[Poly; 2]>,
    /// Galois element for rotation and conjugation keys; `None` for relinearization.
    pub galois: Option<usize>,
    /// Seed of the `a` rows when they are generated pseudorandomly.
    pub seed: Option<[u8; 32]>,
}

impl SwitchingKey {
    pub fn dnum(&self) -> usize {
        self.columns.len()
    }

    pub fn is_compressed(&self) -> bool {
        self.seed.is_some()
    }
}

/// Contiguous limb range `[start, end)` of digit `j` at `limbs` limbs.
pub fn digit_range(j: usize, alpha: usize, limbs: usize) -> std::ops::Range<usize> {
    let start = j * alpha;
    start.min(limbs)..((j + 1) * alpha).min(limbs)
}

pub fn digit_count(limbs: usize, alpha: usize) -> usize {
    limbs.div_ceil(alpha)
}

/// One digit of the decomposed input, and later its raised limbs.
#[derive(Clone, Debug)]
pub struct DigitBlock {
    pub index: usize,
    /// Limb count of the decomposed polynomial.
    pub limbs: usize,
    pub source: std::ops::Range<usize>,
    /// Source limbs in evaluation form.
    pub eval: Vec<Vec<u64>>,
    /// Ring indices of the generated limbs.
    pub targets: Vec<usize>,
    /// Generated limbs in evaluation form, filled by [`mod_up`].
    pub generated: Vec<Vec<u64>>,
    /// Source limbs after the inverse-then-forward round trip of the reference path.
    pub reloaded: Vec<Vec<u64>>,
}

/// Conversion tables for every level and digit.
#[derive(Debug, Clone)]
pub struct KeySwitchTables {
    alpha: usize,
    q_limbs: usize,
    /// `[limbs - 1][digit]`.
    mod_up: Vec<Vec<BasisConverter>>,
    /// `[limbs - 1]`: `P → Q_ℓ`.
    mod_down: Vec<BasisConverter>,
    /// `P^{-1} mod q_i`.
    p_inv: Vec<u64>,
}

impl KeySwitchTables {
    pub fn new(ring: &Ring, q_limbs: usize, alpha: usize) -> Result<Self> {
        let q: Vec<Modulus> = ring.moduli()[..q_limbs].to_vec();
        let p: Vec<Modulus> = ring.moduli()[q_limbs..q_limbs + alpha].to_vec();
        let mut mod_up = Vec::with_capacity(q_limbs);
        let mut mod_down = Vec::with_capacity(q_limbs);
        for limbs in 1..=q_limbs {
            let digits = (0..digit_count(limbs, alpha))
                .map(|j| {
                    let r = digit_range(j, alpha, limbs);
                    let dst: Vec<Modulus> = q[..limbs]
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !r.contains(i))
                        .map(|(_, m)| m.clone())
                        .chain(p.iter().cloned())
                        .collect();
                    BasisConverter::new(&q[r], &dst)
                })
                .collect::<Result<Vec<_>>>()?;
            mod_up.push(digits);
            mod_down.push(BasisConverter::new(&p, &q[..limbs])?);
        }
        let p_inv = q
            .iter()
            .map(|qi| {
                let prod = p.iter().fold(1u64, |acc, pj| qi.mul(acc, pj.value() % qi.value()));
                qi.inv(prod)
            })
            .collect();
        Ok(Self {
            alpha,
            q_limbs,
            mod_up,
            mod_down,
            p_inv,
        })
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn mod_up_converter(&self, limbs: usize, digit: usize) -> &BasisConverter {
        &self.mod_up[limbs - 1][digit]
    }

    pub fn mod_down_converter(&self, limbs: usize) -> &BasisConverter {
        &self.mod_down[limbs - 1]
    }

    /// `P mod q_i` for the gadget factor of limb `i`.
    pub fn p_mod_q(&self, ring: &Ring, i: usize) -> u64 {
        let qi = ring.modulus(i);
        (self.q_limbs..self.q_limbs + self.alpha)
            .fold(1u64, |acc, j| qi.mul(acc, ring.modulus(j).value() % qi.value()))
    }
}

/// Splits an evaluation-form polynomial into digit blocks.
pub fn decomp(ctx: &Context, a: &Poly) -> Result<Vec<DigitBlock>> {
    if a.rep != Representation::Evaluation {
        return Err(Error::Representation("decomposition"));
    }
    let limbs = a.limb_count();
    if limbs == 0 {
        return Err(Error::InvalidParams("cannot decompose an empty polynomial".into()));
    }
    let alpha = ctx.alpha();
    Ok((0..digit_count(limbs, alpha))
        .map(|j| {
            let source = digit_range(j, alpha, limbs);
            let targets = (0..limbs)
                .filter(|i| !source.contains(i))
                .chain(ctx.p_basis())
                .collect();
            DigitBlock {
                index: j,
                limbs,
                eval: a.limbs[source.clone()].to_vec(),
                source,
                targets,
                generated: Vec::new(),
                reloaded: Vec::new(),
            }
        })
        .collect())
}

/// Raises one digit: inverse transform of the source limbs, basis conversion to
/// every other limb, forward transform of what was generated. The reference
/// path also round-trips the source limbs through the transforms.
pub fn mod_up(
    ctx: &Context,
    block: &mut DigitBlock,
    datapath: Datapath,
    counters: &mut OpCounters,
) {
    let ring = ctx.ring();
    let n = ctx.n();
    let conv = ctx.ks_tables().mod_up_converter(block.limbs, block.index);
    let mut coeff = block.eval.clone();
    for (limb, idx) in coeff.iter_mut().zip(block.source.clone()) {
        ring.intt_limb(limb, idx);
    }
    counters.intt += coeff.len() as u64;
    let refs: Vec<&[u64]> = coeff.iter().map(Vec::as_slice).collect();
    let mut generated = match datapath {
        Datapath::Modified => {
            counters.modmul += conv.mult_count() * n as u64;
            conv.convert_poly(&refs, true)
        }
        Datapath::Reference => {
            counters.modmul += conv.naive_mult_count() * n as u64;
            conv.convert_poly_naive(&refs, true)
        }
    };
    for (limb, &idx) in generated.iter_mut().zip(&block.targets) {
        ring.ntt_limb(limb, idx);
    }
    counters.ntt += generated.len() as u64;
    if datapath == Datapath::Reference {
        for (limb, idx) in coeff.iter_mut().zip(block.source.clone()) {
            ring.ntt_limb(limb, idx);
        }
        counters.ntt += coeff.len() as u64;
        block.reloaded = coeff;
    }
    block.generated = generated;
}

/// Accumulator pair over `Q_ℓ ∪ P` in evaluation form.
pub fn new_accumulator(ctx: &Context, limbs: usize) -> [Poly; 2] {
    let basis = ctx.raised_basis(limbs);
    let z = ctx.ring().zero(&basis, Representation::Evaluation);
    [z.clone(), z]
}

fn acc_position(ctx: &Context, limbs: usize, ring_idx: usize) -> usize {
    if ring_idx < ctx.q_limbs() {
        ring_idx
    } else {
        limbs + (ring_idx - ctx.q_limbs())
    }
}

fn mac_limb(m: &Modulus, acc: &mut [u64], x: &[u64], key: &[u64]) {
    let q = m.value();
    for ((u, &s), &t) in acc.iter_mut().zip(x).zip(key) {
        let r = *u + m.mul(s, t);
        *u = r.min(r.wrapping_sub(q));
    }
}

/// Inner product over the digit's own limbs, which need no conversion.
pub fn kskip_partial(
    ctx: &Context,
    block: &DigitBlock,
    key: &[Poly; 2],
    acc: &mut [Poly; 2],
    counters: &mut OpCounters,
) -> Result<()> {
    let limbs = acc[0].limb_count() - ctx.alpha();
    let src = if block.reloaded.is_empty() { &block.eval } else { &block.reloaded };
    for (x, idx) in src.iter().zip(block.source.clone()) {
        let pos = acc_position(ctx, limbs, idx);
        if acc[0].basis[pos] != idx {
            return Err(Error::LevelMismatch(acc[0].limb_count(), idx));
        }
        let m = ctx.ring().modulus(idx);
        for (a, k) in acc.iter_mut().zip(key) {
            mac_limb(m, &mut a.limbs[pos], x, &k.limbs[idx]);
        }
    }
    counters.modmul += 2 * src.len() as u64 * ctx.n() as u64;
    Ok(())
}

/// Inner product over the limbs produced by [`mod_up`].
pub fn kskip_complete(
    ctx: &Context,
    block: &DigitBlock,
    key: &[Poly; 2],
    acc: &mut [Poly; 2],
    counters: &mut OpCounters,
) -> Result<()> {
    let limbs = acc[0].limb_count() - ctx.alpha();
    for (x, &idx) in block.generated.iter().zip(&block.targets) {
        let pos = acc_position(ctx, limbs, idx);
        if acc[0].basis[pos] != idx {
            return Err(Error::LevelMismatch(acc[0].limb_count(), idx));
        }
        let m = ctx.ring().modulus(idx);
        for (a, k) in acc.iter_mut().zip(key) {
            mac_limb(m, &mut a.limbs[pos], x, &k.limbs[idx]);
        }
    }
    counters.modmul += 2 * block.generated.len() as u64 * ctx.n() as u64;
    Ok(())
}

/// Divides a raised polynomial by `P` with rounding, returning it over `Q_ℓ`.
pub fn mod_down(ctx: &Context, raised: &Poly, datapath: Datapath, counters: &mut OpCounters) -> Poly {
    let ring = ctx.ring();
    let n = ctx.n();
    let alpha = ctx.alpha();
    let limbs = raised.limb_count() - alpha;
    let mut p_part: Vec<Vec<u64>> = raised.limbs[limbs..].to_vec();
    for (limb, &idx) in p_part.iter_mut().zip(&raised.basis[limbs..]) {
        ring.intt_limb(limb, idx);
    }
    counters.intt += alpha as u64;
    let conv = ctx.ks_tables().mod_down_converter(limbs);
    let refs: Vec<&[u64]> = p_part.iter().map(Vec::as_slice).collect();
    let mut low = match datapath {
        Datapath::Modified => {
            counters.modmul += conv.mult_count() * n as u64;
            conv.convert_poly(&refs, true)
        }
        Datapath::Reference => {
            counters.modmul += conv.naive_mult_count() * n as u64;
            conv.convert_poly_naive(&refs, true)
        }
    };
    let p_inv = &ctx.ks_tables().p_inv;
    let mut out = Poly {
        rep: Representation::Evaluation,
        basis: raised.basis[..limbs].to_vec(),
        limbs: Vec::with_capacity(limbs),
    };
    for (i, limb) in low.iter_mut().enumerate() {
        ring.ntt_limb(limb, i);
        let m = ring.modulus(i);
        let (c, cs) = (p_inv[i], m.shoup(p_inv[i]));
        let q = m.value();
        let res: Vec<u64> = raised.limbs[i]
            .iter()
            .zip(limb.iter())
            .map(|(&x, &y)| {
                let d = x + q - y;
                m.mul_shoup(d.min(d.wrapping_sub(q)), c, cs)
            })
            .collect();
        out.limbs.push(res);
    }
    counters.ntt += limbs as u64;
    counters.modmul += (limbs * n) as u64;
    out
}

/// Key-switches `a` (evaluation form over the first ℓ limbs), returning the
/// pair `(Δb, Δa)` with `Δb + Δa·s ≈ a·s'`.
pub fn key_switch(
    ctx: &Context,
    a: &Poly,
    key: &SwitchingKey,
    datapath: Datapath,
    counters: &mut OpCounters,
) -> Result<(Poly, Poly)> {
    let limbs = a.limb_count();
    if limbs > ctx.q_limbs() || a.basis.iter().enumerate().any(|(i, &b)| i != b) {
        return Err(Error::InvalidParams("key switching expects a ciphertext-basis prefix".into()));
    }
    let blocks = decomp(ctx, a)?;
    if blocks.len() > key.dnum() {
        return Err(Error::InvalidParams(format!(
            "{} digits but the key has {} columns",
            blocks.len(),
            key.dnum()
        )));
    }
    let mut acc = new_accumulator(ctx, limbs);
    let lb = limb_bytes(ctx.n(), ctx.params().limb_bits);
    for (mut block, column) in blocks.into_iter().zip(&key.columns) {
        match datapath {
            Datapath::Modified => {
                kskip_partial(ctx, &block, column, &mut acc, counters)?;
                mod_up(ctx, &mut block, datapath, counters);
                kskip_complete(ctx, &block, column, &mut acc, counters)?;
            }
            Datapath::Reference => {
                mod_up(ctx, &mut block, datapath, counters);
                kskip_partial(ctx, &block, column, &mut acc, counters)?;
                kskip_complete(ctx, &block, column, &mut acc, counters)?;
            }
        }
        counters.key_bytes_streamed += 2 * (limbs + ctx.alpha()) as u64 * lb;
    }
    let [acc_b, acc_a] = acc;
    let b = mod_down(ctx, &acc_b, datapath, counters);
    let a_out = mod_down(ctx, &acc_a, datapath, counters);
    let schedule = keyswitch_schedule(limbs, ctx.alpha(), datapath, false);
    counters.peak_onchip_bytes = counters.peak_onchip_bytes.max(peak_limbs(&schedule) * lb);
    Ok((b, a_out))
}
