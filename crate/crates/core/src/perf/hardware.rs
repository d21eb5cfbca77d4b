//! Device description and closed-form cycle and size formulas.

use serde::{Deserialize, Serialize};

use crate::params::SchemeParams;

/// Elementwise operation kinds with distinct pipeline latencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElemOp {
    Add,
    Sub,
    MulReduce,
}

/// A group of identical on-chip memory banks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankGroup {
    pub count: u32,
    /// Polynomials (limbs) each bank holds.
    pub polys: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardwareProfile {
    pub clock_hz: f64,
    pub n_functional_units: u32,
    pub cycles_modadd: u64,
    pub cycles_modsub: u64,
    pub cycles_intmul: u64,
    pub cycles_modreduce: u64,
    pub uram_banks: BankGroup,
    pub bram_banks: Vec<BankGroup>,
    pub onchip_total_bytes: u64,
    pub register_file_bytes: u64,
    pub hbm_bytes_per_s: f64,
    pub hbm_ports: u32,
    pub hbm_port_bits: u32,
    pub cmac_cycles_per_limb: u64,
    pub cmac_cycles_per_ct: u64,
    pub key_read_latency: u64,
    /// Fitted: fraction of the raw NTT stage time left after overlapping
    /// the two butterfly pipelines with elementwise work.
    pub ntt_pipeline_factor: f64,
    /// Fitted: constant pipeline fill added to every NTT invocation.
    pub ntt_fill_cycles: u64,
    /// Fitted: sustained fraction of peak HBM bandwidth for key streaming.
    pub hbm_efficiency: f64,
}

pub const MB: f64 = 1e6;

impl Default for HardwareProfile {
    fn default() -> Self {
        Self {
            clock_hz: 3e8,
            n_functional_units: 256,
            cycles_modadd: 7,
            cycles_modsub: 7,
            cycles_intmul: 12,
            cycles_modreduce: 12,
            uram_banks: BankGroup { count: 5, polys: 16 },
            bram_banks: vec![BankGroup { count: 2, polys: 8 }, BankGroup { count: 1, polys: 4 }],
            onchip_total_bytes: 43_000_000,
            register_file_bytes: 2_000_000,
            hbm_bytes_per_s: 460e9,
            hbm_ports: 32,
            hbm_port_bits: 256,
            cmac_cycles_per_limb: 11_399,
            cmac_cycles_per_ct: 546_980,
            key_read_latency: 300,
            ntt_pipeline_factor: 0.5,
            ntt_fill_cycles: 0,
            hbm_efficiency: 0.9,
        }
    }
}

impl HardwareProfile {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = self.clock_hz > 0.0
            && self.n_functional_units > 0
            && self.cycles_modadd > 0
            && self.cycles_modsub > 0
            && self.cycles_intmul > 0
            && self.cycles_modreduce > 0
            && self.uram_banks.count > 0
            && self.uram_banks.polys > 0
            && self.bram_banks.iter().all(|b| b.count > 0 && b.polys > 0)
            && self.onchip_total_bytes > 0
            && self.register_file_bytes > 0
            && self.hbm_bytes_per_s > 0.0
            && self.hbm_ports > 0
            && self.hbm_port_bits > 0
            && self.cmac_cycles_per_limb > 0
            && self.cmac_cycles_per_ct > 0
            && self.ntt_pipeline_factor > 0.0
            && self.hbm_efficiency > 0.0
            && self.hbm_efficiency <= 1.0;
        if positive {
            Ok(())
        } else {
            Err(crate::Error::InvalidParams("hardware profile fields must be positive".into()))
        }
    }

    /// Raw stage formula `limbs · log2 N · N/512`, before any fitted factor.
    pub fn ntt_cycles_raw(n: usize, limbs: usize) -> u64 {
        debug_assert!(n.is_power_of_two());
        limbs as u64 * n.trailing_zeros() as u64 * (n as u64 / 512).max(1)
    }

    /// NTT (or inverse NTT) over `limbs` limbs of degree `n`.
    pub fn ntt_cycles(&self, n: usize, limbs: usize) -> u64 {
        if limbs == 0 {
            return 0;
        }
        let raw = Self::ntt_cycles_raw(n, limbs) as f64 * self.ntt_pipeline_factor;
        raw.ceil() as u64 + self.ntt_fill_cycles
    }

    pub fn elem_latency(&self, op: ElemOp) -> u64 {
        match op {
            ElemOp::Add => self.cycles_modadd,
            ElemOp::Sub => self.cycles_modsub,
            ElemOp::MulReduce => self.cycles_intmul + self.cycles_modreduce,
        }
    }

    /// One result per functional unit per cycle once the pipeline is full.
    pub fn elementwise_cycles(&self, op: ElemOp, n: usize, limbs: usize) -> u64 {
        if limbs == 0 {
            return 0;
        }
        self.stream_cycles(limbs as u64 * n as u64) + self.elem_latency(op)
    }

    /// Throughput-only cycles for `elements` independent scalar operations.
    pub fn stream_cycles(&self, elements: u64) -> u64 {
        elements.div_ceil(self.n_functional_units as u64)
    }

    /// Cycles to move `bytes` between HBM and the chip.
    pub fn hbm_cycles(&self, bytes: u64) -> u64 {
        let per_cycle = self.hbm_bytes_per_s * self.hbm_efficiency / self.clock_hz;
        (bytes as f64 / per_cycle).ceil() as u64
    }

    /// Peak bytes per cycle across all HBM ports at the kernel clock.
    pub fn port_bytes_per_cycle(&self) -> u64 {
        self.hbm_ports as u64 * self.hbm_port_bits as u64 / 8
    }

    pub fn seconds(&self, cycles: u64) -> f64 {
        cycles as f64 / self.clock_hz
    }

    pub fn cmac_cycles(&self, limbs: usize) -> u64 {
        limbs as u64 * self.cmac_cycles_per_limb
    }

    pub fn uram_bytes(&self, poly_bytes: u64) -> u64 {
        self.uram_banks.count as u64 * self.uram_banks.polys as u64 * poly_bytes
    }

    pub fn bram_bytes(&self, poly_bytes: u64) -> u64 {
        self.bram_banks.iter().map(|b| b.count as u64 * b.polys as u64 * poly_bytes).sum()
    }
}

/// Bytes of one limb: `N · log q / 8`.
pub fn poly_bytes(n: usize, limb_bits: u32) -> u64 {
    crate::keyswitch::limb_bytes(n, limb_bits)
}

pub fn ciphertext_bytes(n: usize, limb_bits: u32, limbs: usize) -> u64 {
    2 * limbs as u64 * poly_bytes(n, limb_bits)
}

/// One switching key: `2 × dnum` polynomials over the raised basis, the
/// `a` row replaced by a seed when compressed.
pub fn key_bytes(p: &SchemeParams, compressed: bool) -> u64 {
    let full = 2 * p.dnum as u64 * p.raised_limbs() as u64 * poly_bytes(p.n(), p.limb_bits);
    if compressed {
        full / 2
    } else {
        full
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_ntt_formula() {
        assert_eq!(HardwareProfile::ntt_cycles_raw(1 << 16, 1), 2048);
        assert_eq!(HardwareProfile::ntt_cycles_raw(512, 1), 9);
        assert_eq!(HardwareProfile::ntt_cycles_raw(1 << 14, 1), 448);
    }

    #[test]
    fn elementwise_examples() {
        let hw = HardwareProfile::default();
        assert_eq!(hw.elementwise_cycles(ElemOp::Add, 1 << 16, 1), 263);
        assert_eq!(hw.elementwise_cycles(ElemOp::MulReduce, 1 << 16, 1), 280);
        assert_eq!(hw.elementwise_cycles(ElemOp::Sub, 1 << 16, 0), 0);
    }

    #[test]
    fn full_sizes() {
        let p = SchemeParams::fpga();
        assert_eq!(poly_bytes(p.n(), 54), 442_368);
        assert!((ciphertext_bytes(p.n(), 54, 32) as f64 / MB - 28.3).abs() < 0.1);
        assert!((key_bytes(&p, false) as f64 / MB - 84.9).abs() < 0.5);
        assert_eq!(key_bytes(&p, true) * 2, key_bytes(&p, false));
    }
}
