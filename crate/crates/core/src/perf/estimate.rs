//! Whole-operation estimates: single ops, bootstrapping, training
//! iterations and the parameter grid.

use std::collections::BTreeSet;

use serde::Serialize;

use super::cost::{replay, CostReport};
use super::hardware::{ciphertext_bytes, key_bytes, HardwareProfile, MB};
use super::residency::{keyswitch_schedule, peak_limbs};
use super::trace::{OpKind, OpTrace, TraceBuilder};
use crate::keyswitch::Datapath;
use crate::params::SchemeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasicOp {
    Add,
    Mult,
    Rescale,
    Rotate,
}

impl BasicOp {
    pub const ALL: [BasicOp; 4] = [BasicOp::Add, BasicOp::Mult, BasicOp::Rescale, BasicOp::Rotate];

    pub fn name(self) -> &'static str {
        match self {
            BasicOp::Add => "Add",
            BasicOp::Mult => "Mult",
            BasicOp::Rescale => "Rescale",
            BasicOp::Rotate => "Rotate",
        }
    }
}

/// Trace of one basic operation on a ciphertext with `limbs` limbs.
pub fn basic_op_trace(op: BasicOp, p: &SchemeParams, limbs: usize, datapath: Datapath) -> OpTrace {
    let mut b = TraceBuilder::for_params(p, datapath);
    match op {
        BasicOp::Add => {
            b.op(OpKind::Add, limbs);
        }
        BasicOp::Mult => {
            b.mult(limbs);
        }
        BasicOp::Rescale => {
            b.op(OpKind::Rescale, limbs);
        }
        BasicOp::Rotate => {
            b.rotate(limbs);
        }
    }
    b.finish()
}

/// Modeled wall time in seconds of `op` at the top level of `p`.
pub fn estimate_op_time(op: BasicOp, p: &SchemeParams, hw: &HardwareProfile) -> f64 {
    replay(&basic_op_trace(op, p, p.q_limbs(), Datapath::Modified), hw).seconds
}

/// Per-op figures against which the model is compared, in seconds.
pub fn reference_op_time(op: BasicOp) -> f64 {
    match op {
        BasicOp::Add => 0.04e-3,
        BasicOp::Mult => 1.71e-3,
        BasicOp::Rescale => 0.19e-3,
        BasicOp::Rotate => 1.57e-3,
    }
}

pub const REFERENCE_AMORTIZED_S: f64 = 0.477e-6;
pub const REFERENCE_LR_S: [(usize, f64); 2] = [(1, 0.103), (8, 0.081)];
/// Relative tolerance of every model-versus-reference comparison.
pub const TOLERANCE: f64 = 0.5;

pub fn within_band(model: f64, reference: f64) -> bool {
    (model - reference).abs() <= TOLERANCE * reference
}

/// Polynomial stage of bootstrapping, as a count of ciphertext products per
/// depth layer plus scalar work.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalModShape {
    pub name: &'static str,
    pub depth: usize,
    pub nonscalar_mults: usize,
    /// Constant multiplications and additions of coefficients.
    pub scalar_ops: usize,
}

/// Ciphertext products of a baby-step giant-step Chebyshev evaluation of
/// `degree` with `2^baby_log` baby steps.
pub fn chebyshev_nonscalar(degree: usize, baby_log: u32) -> usize {
    let baby = 1usize << baby_log;
    let leaves = (degree + 1).div_ceil(baby);
    let giants = leaves.next_power_of_two().trailing_zeros() as usize;
    (baby - 1) + giants + leaves.saturating_sub(1)
}

impl EvalModShape {
    /// Scaled cosine of degree 63 followed by three double-angle steps
    /// (depth 6 + 3).
    pub fn cosine_double_angle() -> Self {
        Self {
            name: "cosine+double-angle",
            depth: 9,
            nonscalar_mults: chebyshev_nonscalar(63, 3) + 3,
            scalar_ops: 64,
        }
    }

    /// Single degree-511 Chebyshev interpolant with 32 baby steps, as run by
    /// the software bootstrapper.
    pub fn direct_chebyshev_511() -> Self {
        Self {
            name: "chebyshev-511",
            depth: 9,
            nonscalar_mults: chebyshev_nonscalar(511, 5),
            scalar_ops: 512,
        }
    }
}

impl Default for EvalModShape {
    fn default() -> Self {
        Self::cosine_double_angle()
    }
}

/// Splits `bits` radix-2 stages into `groups` runs, earlier runs longer.
pub fn stage_split(bits: usize, groups: usize) -> Vec<usize> {
    let g = groups.max(1);
    (0..g).map(|i| bits / g + usize::from(i < bits % g)).collect()
}

/// Rotation offsets (mod `slots`) of a merged run of radix-2 stages with
/// half-lengths `halves`.
pub fn merged_offsets(halves: &[usize], slots: usize) -> BTreeSet<usize> {
    let mut set = BTreeSet::from([0usize]);
    for &h in halves {
        let mut next = BTreeSet::new();
        for &o in &set {
            next.insert(o);
            next.insert((o + h) % slots);
            next.insert((o + slots - h % slots) % slots);
        }
        set = next;
    }
    set
}

/// Rotations of a baby-step giant-step evaluation with `bs` baby steps:
/// `(baby rotations, giant rotations)`.
pub fn bsgs_rotations(offsets: &BTreeSet<usize>, bs: usize) -> (usize, usize) {
    let baby: BTreeSet<usize> = offsets.iter().map(|o| o % bs).filter(|&b| b != 0).collect();
    let giant: BTreeSet<usize> = offsets.iter().map(|o| o - o % bs).filter(|&g| g != 0).collect();
    (baby.len(), giant.len())
}

/// Baby-step count minimizing rotations, with hoisted baby steps weighted
/// at half a full rotation.
pub fn best_baby_steps(offsets: &BTreeSet<usize>, slots: usize) -> usize {
    let mut best = (usize::MAX, 1);
    let mut bs = 1;
    while bs <= slots {
        let (b, g) = bsgs_rotations(offsets, bs);
        let cost = b + 2 * g;
        if cost < best.0 {
            best = (cost, bs);
        }
        bs *= 2;
    }
    best.1
}

/// One linear-transform level: hoisted baby steps, a plaintext product per
/// diagonal, giant-step rotations, one rescale.
fn linear_stage(b: &mut TraceBuilder, offsets: &BTreeSet<usize>, slots: usize, limbs: usize) {
    let bs = best_baby_steps(offsets, slots);
    let (baby, giant) = bsgs_rotations(offsets, bs);
    for i in 0..baby {
        if i == 0 {
            b.rotate(limbs);
        } else {
            b.rotate_hoisted(limbs);
        }
    }
    b.repeat(OpKind::PlainMul, limbs, offsets.len());
    b.repeat(OpKind::Add, limbs, offsets.len().saturating_sub(1));
    for _ in 0..giant {
        b.rotate(limbs);
        b.op(OpKind::Add, limbs);
    }
    b.op(OpKind::Rescale, limbs);
}

fn eval_mod(b: &mut TraceBuilder, shape: &EvalModShape, limbs: usize) {
    b.repeat(OpKind::Scalar, limbs, shape.scalar_ops / 2);
    b.repeat(OpKind::Add, limbs, shape.scalar_ops / 2);
    for layer in 0..shape.depth {
        let count = shape.nonscalar_mults / shape.depth + usize::from(layer < shape.nonscalar_mults % shape.depth);
        for _ in 0..count {
            b.mult(limbs - layer);
        }
    }
}

/// Hardware schedule of one bootstrapping of a `slots`-slot ciphertext.
pub fn bootstrap_trace(p: &SchemeParams, slots: usize, shape: &EvalModShape, datapath: Datapath) -> OpTrace {
    let mut b = TraceBuilder::for_params(p, datapath);
    let top = p.q_limbs();
    let half = p.n() / 2;
    // ModRaise: back to coefficients on the last limb, forward over all.
    b.repeat(OpKind::Ntt, 1, 2).repeat(OpKind::Ntt, top, 2);
    let mut s = slots;
    while s < half {
        b.rotate(top).op(OpKind::Add, top);
        s *= 2;
    }
    let bits = slots.trailing_zeros() as usize;
    let mut limbs = top;
    // CoeffToSlot: half-lengths slots/2 down to 1.
    let mut h = slots / 2;
    for run in stage_split(bits, p.fft_iter) {
        let halves: Vec<usize> = (0..run).map(|i| h >> i).collect();
        h >>= run;
        linear_stage(&mut b, &merged_offsets(&halves, slots), slots, limbs);
        limbs -= 1;
    }
    // Split into real and imaginary parts.
    b.rotate(limbs).op(OpKind::Add, limbs).op(OpKind::Scalar, limbs);
    let evalmods = if slots >= half { 2 } else { 1 };
    for _ in 0..evalmods {
        eval_mod(&mut b, shape, limbs);
    }
    limbs -= shape.depth;
    if evalmods == 2 {
        b.op(OpKind::Scalar, limbs).op(OpKind::Add, limbs);
    }
    // SlotToCoeff: half-lengths 1 up to slots/2.
    let mut h = 1;
    for run in stage_split(bits, p.fft_iter) {
        let halves: Vec<usize> = (0..run).map(|i| h << i).collect();
        h <<= run;
        linear_stage(&mut b, &merged_offsets(&halves, slots), slots, limbs);
        limbs -= 1;
    }
    b.finish()
}

/// Modeled bootstrapping and the amortized multiplication time per slot.
pub fn estimate_bootstrap(
    p: &SchemeParams,
    slots: usize,
    shape: &EvalModShape,
    hw: &HardwareProfile,
) -> crate::Result<CostReport> {
    let levels = p
        .q_limbs()
        .checked_sub(p.fft_iter * 2 + shape.depth + 1)
        .filter(|&l| l > 0)
        .ok_or_else(|| crate::Error::InvalidParams("no levels left after bootstrapping".into()))?;
    let mut report = replay(&bootstrap_trace(p, slots, shape, Datapath::Modified), hw);
    let t_mult: Vec<f64> = (1..=levels)
        .map(|i| replay(&basic_op_trace(BasicOp::Mult, p, i + 1, Datapath::Modified), hw).seconds)
        .collect();
    report.amortized_s = Some(crate::bootstrap::amortized_mult_time(report.seconds, &t_mult, levels, slots)?);
    Ok(report)
}

/// Shape of one training iteration on the accelerator.
#[derive(Clone, Debug, PartialEq)]
pub struct LrCostShape {
    /// Encrypted minibatch ciphertexts processed per iteration.
    pub ciphertexts: usize,
    pub slots: usize,
    /// Work per minibatch ciphertext as `(kind, levels below the top, count)`;
    /// relinearization and rescaling are deferred to the aggregates.
    pub per_ciphertext: Vec<(OpKind, usize, usize)>,
    /// Ciphertext products on the aggregated values (sigmoid, gradient
    /// scaling, momentum) and rotations for slot sums.
    pub shared_mults: usize,
    pub shared_rotations: usize,
    pub bootstraps: usize,
    /// Levels consumed per iteration.
    pub depth: usize,
    /// Ciphertext exchanges between devices per iteration.
    pub exchanges: usize,
    /// Bootstrapping runs on one device; the remaining work splits evenly.
    pub serial_bootstrap: bool,
}

impl Default for LrCostShape {
    fn default() -> Self {
        Self {
            ciphertexts: 1024,
            slots: 256,
            // Inner product with the weights, then the gradient term after
            // one product level and the two sigmoid levels.
            per_ciphertext: vec![(OpKind::Tensor, 0, 1), (OpKind::Add, 0, 1), (OpKind::Tensor, 3, 1), (OpKind::Add, 3, 1)],
            shared_mults: 6,
            shared_rotations: 16,
            bootstraps: 1,
            depth: 5,
            exchanges: 2,
            serial_bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LrEstimate {
    pub devices: usize,
    pub bootstrap_s: f64,
    pub parallel_s: f64,
    pub shared_s: f64,
    pub comm_s: f64,
    pub total_s: f64,
}

/// Broadcast or reduction over `devices` boards: `⌈log2 devices⌉` rounds of
/// one ciphertext each per exchange.
pub fn comm_seconds(devices: usize, exchanges: usize, hw: &HardwareProfile) -> f64 {
    if devices <= 1 {
        return 0.0;
    }
    let rounds = devices.next_power_of_two().trailing_zeros() as u64;
    hw.seconds(exchanges as u64 * rounds * hw.cmac_cycles_per_ct)
}

pub fn estimate_lr(
    devices: usize,
    p: &SchemeParams,
    shape: &LrCostShape,
    evalmod: &EvalModShape,
    hw: &HardwareProfile,
) -> crate::Result<LrEstimate> {
    let devices = devices.max(1);
    let boot = estimate_bootstrap(p, shape.slots, evalmod, hw)?.seconds * shape.bootstraps as f64;
    let top = p.limbs_after_bootstrap().unwrap_or(1).max(shape.depth + 1);

    let mut per_ct = TraceBuilder::for_params(p, Datapath::Modified);
    for &(kind, drop, count) in &shape.per_ciphertext {
        per_ct.repeat(kind, top.saturating_sub(drop).max(1), count);
    }
    let per_ct_s = replay(&per_ct.finish(), hw).seconds;

    let mut shared = TraceBuilder::for_params(p, Datapath::Modified);
    for i in 0..shape.shared_mults {
        shared.mult(top - (i * shape.depth / shape.shared_mults.max(1)).min(top - 2));
    }
    for _ in 0..shape.shared_rotations {
        shared.rotate(top - 1).op(OpKind::Add, top - 1);
    }
    let shared_s = replay(&shared.finish(), hw).seconds;

    let parallel_s = per_ct_s * shape.ciphertexts.div_ceil(devices) as f64;
    let comm_s = comm_seconds(devices, shape.exchanges, hw);
    let (boot_s, shared_s) = if shape.serial_bootstrap || devices == 1 {
        (boot, shared_s)
    } else {
        (boot / devices as f64, shared_s)
    };
    Ok(LrEstimate {
        devices,
        bootstrap_s: boot_s,
        parallel_s,
        shared_s,
        comm_s,
        total_s: boot_s + parallel_s + shared_s + comm_s,
    })
}

/// One cell of the parameter grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExploreRow {
    pub dnum: usize,
    #[serde(rename = "fftIter")]
    pub fft_iter: usize,
    pub alpha: usize,
    /// May be negative when bootstrapping does not fit.
    pub levels_after: i64,
    pub key_mb: f64,
    pub ct_mb: f64,
    pub ntt_count: u64,
    /// Empty for infeasible cells.
    pub amortized_us: Option<f64>,
    pub levels: usize,
    pub ext_limbs: usize,
    pub key_mb_compressed: f64,
    pub feasible: bool,
}

/// Largest `L` with `(L+1) + ⌈(L+1)/dnum⌉` limbs inside `log_pq` bits.
pub fn max_levels(log_pq: u32, limb_bits: u32, dnum: usize) -> Option<usize> {
    let total = (log_pq / limb_bits) as usize;
    (1..=total)
        .rev()
        .find(|&ql| ql + ql.div_ceil(dnum.max(1)) <= total)
        .map(|ql| ql - 1)
}

pub fn explore_params(
    base: &SchemeParams,
    log_pq: u32,
    dnums: &[usize],
    fft_iters: &[usize],
    slots: usize,
    shape: &EvalModShape,
    hw: &HardwareProfile,
) -> Vec<ExploreRow> {
    let mut rows = Vec::new();
    for &dnum in dnums {
        for &fft_iter in fft_iters {
            let levels = max_levels(log_pq, base.limb_bits, dnum).unwrap_or(0);
            let p = SchemeParams {
                levels,
                dnum,
                fft_iter,
                ..base.clone()
            };
            let alpha = p.alpha();
            let levels_after = p.q_limbs() as i64 - (2 * fft_iter + shape.depth) as i64 - 1;
            // P must cover the largest digit.
            let feasible = levels_after > 0 && alpha >= p.q_limbs().div_ceil(dnum) && p.log_pq() <= log_pq;
            let (ntt_count, amortized_us) = if feasible {
                let trace = bootstrap_trace(&p, slots, shape, Datapath::Modified);
                let ntt = count_ntts(&trace, p.limb_bits);
                let am = estimate_bootstrap(&p, slots, shape, hw).ok().and_then(|r| r.amortized_s);
                (ntt, am.map(|a| a * 1e6))
            } else {
                (0, None)
            };
            rows.push(ExploreRow {
                dnum,
                fft_iter,
                alpha,
                levels_after,
                key_mb: key_bytes(&p, false) as f64 / MB,
                ct_mb: ciphertext_bytes(p.n(), p.limb_bits, p.raised_limbs()) as f64 / MB,
                ntt_count,
                amortized_us,
                levels,
                ext_limbs: alpha,
                key_mb_compressed: key_bytes(&p, true) as f64 / MB,
                feasible,
            });
        }
    }
    rows
}

/// Limb NTTs (forward and inverse) a trace performs.
pub fn count_ntts(trace: &OpTrace, limb_bits: u32) -> u64 {
    use super::cost::KeySwitchPlan;
    trace
        .records
        .iter()
        .map(|r| match r.kind {
            OpKind::Ntt => r.limbs as u64,
            OpKind::Rescale if r.limbs > 1 => 2 * r.limbs as u64,
            OpKind::KeySwitch | OpKind::HoistedKeySwitch => {
                let c = KeySwitchPlan::new(r.n, limb_bits, r.limbs, r.alpha, r.datapath, r.kind == OpKind::HoistedKeySwitch)
                    .counters();
                c.ntt + c.intt
            }
            _ => 0,
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResidencyCheck {
    pub peak_bytes: u64,
    pub capacity_bytes: u64,
    pub pass: bool,
}

/// Peak on-chip residency over the key switches of a trace. With
/// `keys_resident` every switching key is loaded up front instead of being
/// streamed digit by digit.
pub fn onchip_residency_check(trace: &OpTrace, hw: &HardwareProfile, keys_resident: bool) -> ResidencyCheck {
    let peak_bytes = trace
        .records
        .iter()
        .filter(|r| matches!(r.kind, OpKind::KeySwitch | OpKind::HoistedKeySwitch))
        .map(|r| {
            let limbs = peak_limbs(&keyswitch_schedule(r.limbs, r.alpha, r.datapath, keys_resident));
            limbs * super::hardware::poly_bytes(r.n, trace.limb_bits)
        })
        .max()
        .unwrap_or(0);
    ResidencyCheck {
        peak_bytes,
        capacity_bytes: hw.onchip_total_bytes,
        pass: peak_bytes <= hw.onchip_total_bytes,
    }
}

/// One-device throughput of limb NTTs at ring degree `n`, read two ways:
/// counting every limb as one operation, or a whole `limbs`-limb polynomial.
pub fn ntt_throughput(n: usize, limbs: usize, hw: &HardwareProfile) -> (f64, f64) {
    let per_limb = hw.ntt_cycles(n, 1) as f64;
    let per_poly = hw.ntt_cycles(n, limbs) as f64;
    (hw.clock_hz / per_limb, hw.clock_hz / per_poly)
}
