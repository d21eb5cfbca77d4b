//! Operation traces replayed by the cost model.

use std::fmt;

use crate::keyswitch::Datapath;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    /// Ciphertext + ciphertext.
    Add,
    /// Ciphertext + plaintext.
    AddPlain,
    /// Multiplication by a small integer or an encoded constant.
    Scalar,
    /// Ciphertext × plaintext.
    PlainMul,
    /// Ciphertext × ciphertext tensor product before relinearization.
    Tensor,
    Rescale,
    Automorph,
    /// Full key switch of one polynomial.
    KeySwitch,
    /// Key switch whose ModUp is shared with an earlier switch of the same input.
    HoistedKeySwitch,
    /// Forward or inverse NTT over the listed limbs of one polynomial.
    Ntt,
}

impl OpKind {
    pub const ALL: [OpKind; 10] = [
        OpKind::Add,
        OpKind::AddPlain,
        OpKind::Scalar,
        OpKind::PlainMul,
        OpKind::Tensor,
        OpKind::Rescale,
        OpKind::Automorph,
        OpKind::KeySwitch,
        OpKind::HoistedKeySwitch,
        OpKind::Ntt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::AddPlain => "add_plain",
            OpKind::Scalar => "scalar",
            OpKind::PlainMul => "plain_mul",
            OpKind::Tensor => "tensor",
            OpKind::Rescale => "rescale",
            OpKind::Automorph => "automorph",
            OpKind::KeySwitch => "keyswitch",
            OpKind::HoistedKeySwitch => "keyswitch_hoisted",
            OpKind::Ntt => "ntt",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub kind: OpKind,
    /// Ciphertext limbs the operation runs over (before any level drop).
    pub limbs: usize,
    pub n: usize,
    /// Extension limbs; only meaningful for key switches.
    pub alpha: usize,
    pub datapath: Datapath,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpTrace {
    /// Residue width, used to turn limb counts into bytes.
    pub limb_bits: u32,
    pub records: Vec<TraceRecord>,
}

impl OpTrace {
    pub fn new(limb_bits: u32) -> Self {
        Self {
            limb_bits,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, kind: OpKind, limbs: usize, n: usize, alpha: usize, datapath: Datapath) {
        self.records.push(TraceRecord {
            kind,
            limbs,
            n,
            alpha,
            datapath,
        });
    }

    pub fn extend(&mut self, other: &OpTrace) {
        self.records.extend_from_slice(&other.records);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, kind: OpKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }
}

/// Builds synthetic traces for one ring shape, mirroring what the evaluator
/// records for each homomorphic operation.
#[derive(Clone, Debug)]
pub struct TraceBuilder {
    pub n: usize,
    pub limb_bits: u32,
    pub alpha: usize,
    pub datapath: Datapath,
    pub trace: OpTrace,
}

impl TraceBuilder {
    pub fn new(n: usize, limb_bits: u32, alpha: usize, datapath: Datapath) -> Self {
        Self {
            n,
            limb_bits,
            alpha,
            datapath,
            trace: OpTrace::new(limb_bits),
        }
    }

    pub fn op(&mut self, kind: OpKind, limbs: usize) -> &mut Self {
        self.trace.push(kind, limbs, self.n, self.alpha, self.datapath);
        self
    }

    pub fn repeat(&mut self, kind: OpKind, limbs: usize, times: usize) -> &mut Self {
        for _ in 0..times {
            self.op(kind, limbs);
        }
        self
    }

    /// Tensor, relinearize, rescale.
    pub fn mult(&mut self, limbs: usize) -> &mut Self {
        self.op(OpKind::Tensor, limbs)
            .op(OpKind::KeySwitch, limbs)
            .op(OpKind::Add, limbs)
            .op(OpKind::Rescale, limbs)
    }

    pub fn rotate(&mut self, limbs: usize) -> &mut Self {
        self.op(OpKind::Automorph, limbs)
            .op(OpKind::KeySwitch, limbs)
            .op(OpKind::AddPlain, limbs)
    }

    pub fn rotate_hoisted(&mut self, limbs: usize) -> &mut Self {
        self.op(OpKind::Automorph, limbs)
            .op(OpKind::HoistedKeySwitch, limbs)
            .op(OpKind::AddPlain, limbs)
    }

    pub fn for_params(p: &crate::params::SchemeParams, datapath: Datapath) -> Self {
        Self::new(p.n(), p.limb_bits, p.alpha(), datapath)
    }

    pub fn finish(self) -> OpTrace {
        self.trace
    }
}
