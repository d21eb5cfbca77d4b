//! Cycle costs of key switching and of replayed traces.

use std::collections::BTreeMap;
use std::fmt;

use super::hardware::{poly_bytes, ElemOp, HardwareProfile};
use super::residency::{keyswitch_schedule, peak_limbs};
use super::trace::{OpKind, OpTrace, TraceRecord};
use crate::keyswitch::{digit_count, digit_range, Datapath, OpCounters};

/// Work of one digit of a key switch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DigitWork {
    pub source_limbs: usize,
    pub target_limbs: usize,
    pub intt: u64,
    pub ntt: u64,
    /// Basis-conversion multiplications.
    pub conv_modmul: u64,
    /// Inner-product multiplications.
    pub kskip_modmul: u64,
    pub key_bytes: u64,
}

/// Analytic plan of one key switch, matching what the functional key
/// switch counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeySwitchPlan {
    pub n: usize,
    pub limbs: usize,
    pub alpha: usize,
    pub datapath: Datapath,
    pub hoisted: bool,
    pub limb_bytes: u64,
    pub digits: Vec<DigitWork>,
    /// Per polynomial: inverse NTTs, conversion multiplications, NTTs, and
    /// the final `P^{-1}` multiplications.
    pub mod_down_intt: u64,
    pub mod_down_conv_modmul: u64,
    pub mod_down_ntt: u64,
    pub mod_down_scale_modmul: u64,
}

fn conv_mults(src: usize, dst: usize, datapath: Datapath) -> u64 {
    match datapath {
        Datapath::Modified => (src * (dst + 1)) as u64,
        Datapath::Reference => (2 * src * dst) as u64,
    }
}

impl KeySwitchPlan {
    /// `hoisted` drops the ModUp work, which a hoisted rotation shares with
    /// an earlier switch of the same ciphertext.
    pub fn new(n: usize, limb_bits: u32, limbs: usize, alpha: usize, datapath: Datapath, hoisted: bool) -> Self {
        let lb = poly_bytes(n, limb_bits);
        let mut plan = KeySwitchPlan {
            n,
            limbs,
            alpha,
            datapath,
            hoisted,
            limb_bytes: lb,
            ..Default::default()
        };
        if limbs == 0 {
            return plan;
        }
        let raised = limbs + alpha;
        for j in 0..digit_count(limbs, alpha) {
            let src = digit_range(j, alpha, limbs).len();
            let dst = raised - src;
            let mut d = DigitWork {
                source_limbs: src,
                target_limbs: dst,
                kskip_modmul: 2 * (raised * n) as u64,
                key_bytes: 2 * raised as u64 * lb,
                ..Default::default()
            };
            if !hoisted {
                d.intt = src as u64;
                d.ntt = match datapath {
                    Datapath::Modified => dst as u64,
                    Datapath::Reference => raised as u64,
                };
                d.conv_modmul = conv_mults(src, dst, datapath) * n as u64;
            }
            plan.digits.push(d);
        }
        plan.mod_down_intt = alpha as u64;
        plan.mod_down_conv_modmul = conv_mults(alpha, limbs, datapath) * n as u64;
        plan.mod_down_ntt = limbs as u64;
        plan.mod_down_scale_modmul = (limbs * n) as u64;
        plan
    }

    /// Totals in the same shape as the functional counters.
    pub fn counters(&self) -> OpCounters {
        let mut c = OpCounters::default();
        if self.limbs == 0 {
            return c;
        }
        for d in &self.digits {
            c.ntt += d.ntt;
            c.intt += d.intt;
            c.modmul += d.conv_modmul + d.kskip_modmul;
            c.key_bytes_streamed += d.key_bytes;
        }
        c.intt += 2 * self.mod_down_intt;
        c.ntt += 2 * self.mod_down_ntt;
        c.modmul += 2 * (self.mod_down_conv_modmul + self.mod_down_scale_modmul);
        c.peak_onchip_bytes = self.peak_limbs(false) * self.limb_bytes;
        c
    }

    pub fn peak_limbs(&self, keys_resident: bool) -> u64 {
        peak_limbs(&keyswitch_schedule(self.limbs, self.alpha, self.datapath, keys_resident))
    }

    /// Raised digits written to and read back from HBM by the reference
    /// datapath, whose schedule does not fit on chip.
    pub fn spill_bytes(&self) -> u64 {
        match self.datapath {
            Datapath::Modified => 0,
            Datapath::Reference if self.hoisted => 0,
            Datapath::Reference => {
                self.digits.len() as u64 * (self.limbs + self.alpha) as u64 * self.limb_bytes
            }
        }
    }
}

/// Cycles of one key switch.
///
/// Modified datapath: each digit costs `max(compute, key transfer + read
/// latency)` since the next key block streams in while the current digit is
/// processed. Reference datapath: every digit is raised first and spilled,
/// then the inner product reads digits and keys back.
pub fn keyswitch_cost(plan: &KeySwitchPlan, hw: &HardwareProfile) -> CostReport {
    let mut report = CostReport::default();
    if plan.limbs == 0 {
        return report;
    }
    let n = plan.n;
    let modup = |d: &DigitWork| {
        hw.ntt_cycles(n, d.intt as usize) + hw.ntt_cycles(n, d.ntt as usize) + hw.stream_cycles(d.conv_modmul)
    };
    let mut cycles = 0u64;
    let mut hbm = 0u64;
    match plan.datapath {
        Datapath::Modified => {
            for d in &plan.digits {
                let compute = modup(d) + hw.stream_cycles(d.kskip_modmul);
                let transfer = hw.hbm_cycles(d.key_bytes) + hw.key_read_latency;
                cycles += compute.max(transfer);
                hbm += d.key_bytes;
            }
        }
        Datapath::Reference => {
            let spill = plan.spill_bytes();
            let per_digit_spill = spill / plan.digits.len().max(1) as u64;
            cycles += plan.digits.iter().map(modup).sum::<u64>();
            cycles += hw.hbm_cycles(spill);
            for d in &plan.digits {
                let transfer = hw.hbm_cycles(d.key_bytes + per_digit_spill) + hw.key_read_latency;
                cycles += hw.stream_cycles(d.kskip_modmul).max(transfer);
                hbm += d.key_bytes;
            }
            hbm += 2 * spill;
        }
    }
    let mod_down = hw.ntt_cycles(n, plan.mod_down_intt as usize)
        + hw.stream_cycles(plan.mod_down_conv_modmul)
        + hw.ntt_cycles(n, plan.mod_down_ntt as usize)
        + hw.elementwise_cycles(ElemOp::MulReduce, n, plan.limbs);
    cycles += 2 * mod_down;
    report.add(
        if plan.hoisted { OpKind::HoistedKeySwitch } else { OpKind::KeySwitch },
        cycles,
    );
    report.hbm_bytes = hbm;
    report.peak_onchip_bytes = plan.peak_limbs(false) * plan.limb_bytes;
    report.finish(hw);
    report
}

/// Cycles of a single trace record.
pub fn record_cycles(r: &TraceRecord, limb_bits: u32, hw: &HardwareProfile) -> (u64, u64) {
    let (n, l) = (r.n, r.limbs);
    let c = match r.kind {
        OpKind::Add => hw.elementwise_cycles(ElemOp::Add, n, 2 * l),
        OpKind::AddPlain => hw.elementwise_cycles(ElemOp::Add, n, l),
        OpKind::Scalar => hw.elementwise_cycles(ElemOp::MulReduce, n, 2 * l),
        // Plaintexts (transform diagonals) are read from HBM as they are used.
        OpKind::PlainMul => {
            let bytes = l as u64 * poly_bytes(n, limb_bits);
            let c = hw.elementwise_cycles(ElemOp::MulReduce, n, 2 * l).max(hw.hbm_cycles(bytes));
            return (c, bytes);
        }
        // d0, d2 and the two cross products accumulated in place.
        OpKind::Tensor => hw.elementwise_cycles(ElemOp::MulReduce, n, 4 * l),
        OpKind::Rescale => {
            if l < 2 {
                0
            } else {
                2 * (hw.ntt_cycles(n, 1) + hw.ntt_cycles(n, l - 1))
                    + hw.elementwise_cycles(ElemOp::MulReduce, n, 2 * (l - 1))
            }
        }
        // Index permutation streamed through the units.
        OpKind::Automorph => hw.elementwise_cycles(ElemOp::Add, n, 2 * l),
        OpKind::KeySwitch | OpKind::HoistedKeySwitch => {
            let plan = KeySwitchPlan::new(n, limb_bits, l, r.alpha, r.datapath, r.kind == OpKind::HoistedKeySwitch);
            let rep = keyswitch_cost(&plan, hw);
            return (rep.total_cycles, rep.hbm_bytes);
        }
        OpKind::Ntt => hw.ntt_cycles(n, l),
    };
    (c, 0)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostReport {
    /// Per op kind: (count, cycles).
    pub per_op: BTreeMap<&'static str, (u64, u64)>,
    pub total_cycles: u64,
    pub seconds: f64,
    /// Off-chip traffic.
    pub hbm_bytes: u64,
    pub peak_onchip_bytes: u64,
    /// Amortized multiplication time per slot, when the report covers a
    /// bootstrapping plus the multiplications it enables.
    pub amortized_s: Option<f64>,
}

impl CostReport {
    pub fn add(&mut self, kind: OpKind, cycles: u64) {
        let e = self.per_op.entry(kind.name()).or_default();
        e.0 += 1;
        e.1 += cycles;
        self.total_cycles += cycles;
    }

    pub fn finish(&mut self, hw: &HardwareProfile) {
        self.seconds = hw.seconds(self.total_cycles);
    }

    pub fn merge(&mut self, other: &CostReport) {
        for (k, (c, y)) in &other.per_op {
            let e = self.per_op.entry(k).or_default();
            e.0 += c;
            e.1 += y;
        }
        self.total_cycles += other.total_cycles;
        self.seconds += other.seconds;
        self.hbm_bytes += other.hbm_bytes;
        self.peak_onchip_bytes = self.peak_onchip_bytes.max(other.peak_onchip_bytes);
    }

    pub fn sum_of_parts(&self) -> u64 {
        self.per_op.values().map(|v| v.1).sum()
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:>8} {:>14}", "op", "count", "cycles")?;
        for (k, (count, cycles)) in &self.per_op {
            writeln!(f, "{k:<20} {count:>8} {cycles:>14}")?;
        }
        writeln!(f, "total_cycles={}", self.total_cycles)?;
        writeln!(f, "seconds={:.6e}", self.seconds)?;
        writeln!(f, "hbm_bytes={}", self.hbm_bytes)?;
        write!(f, "peak_onchip_bytes={}", self.peak_onchip_bytes)?;
        if let Some(a) = self.amortized_s {
            write!(f, "\namortized_us_per_slot={:.4}", a * 1e6)?;
        }
        Ok(())
    }
}

/// Replays a trace in order on one device.
pub fn replay(trace: &OpTrace, hw: &HardwareProfile) -> CostReport {
    let mut report = CostReport::default();
    let lb = |n| poly_bytes(n, trace.limb_bits);
    for r in &trace.records {
        let (cycles, bytes) = record_cycles(r, trace.limb_bits, hw);
        report.add(r.kind, cycles);
        report.hbm_bytes += bytes;
        if matches!(r.kind, OpKind::KeySwitch | OpKind::HoistedKeySwitch) {
            let peak = peak_limbs(&keyswitch_schedule(r.limbs, r.alpha, r.datapath, false));
            report.peak_onchip_bytes = report.peak_onchip_bytes.max(peak * lb(r.n));
        }
    }
    report.finish(hw);
    report
}
