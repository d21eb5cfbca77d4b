//! FAB1 binary format for ciphertexts and keys.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "FAB1" | version u32 | kind u32 | reserved u32
//! N u64 | log q u64 | L u64 | dnum u64 | fftIter u64 | scale f64
//! payload
//! ```
//!
//! Polynomials are written as `rep u64 | limb count u64 | basis index u64…`
//! followed by the limbs in order, one u64 word per residue. Compressed
//! switching keys carry their 32-byte seed instead of the `a` rows.

use std::collections::BTreeMap;

use crate::ckks::{sampling, Ciphertext, EvalKeys, SecretKey};
use crate::error::{Error, Result};
use crate::keyswitch::SwitchingKey;
use crate::params::{Context, SchemeParams};
use crate::poly::{Poly, Representation};

pub const MAGIC: &[u8; 4] = b"FAB1";
pub const VERSION: u32 = 1;
const HEADER_BYTES: usize = 16 + 6 * 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum ObjectKind {
    Ciphertext = 1,
    SwitchingKey = 2,
    SecretKey = 3,
    EvalKeys = 4,
}

impl ObjectKind {
    fn from_u32(v: u32) -> Result<Self> {
        Ok(match v {
            1 => ObjectKind::Ciphertext,
            2 => ObjectKind::SwitchingKey,
            3 => ObjectKind::SecretKey,
            4 => ObjectKind::EvalKeys,
            other => return Err(Error::InvalidParams(format!("unknown object kind {other}"))),
        })
    }
}

/// Parameters recorded in every file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamsBlock {
    pub n: u64,
    pub log_q: u64,
    pub levels: u64,
    pub dnum: u64,
    pub fft_iter: u64,
    pub scale: f64,
}

impl ParamsBlock {
    pub fn of(p: &SchemeParams) -> Self {
        Self {
            n: p.n() as u64,
            log_q: p.limb_bits as u64,
            levels: p.levels as u64,
            dnum: p.dnum as u64,
            fft_iter: p.fft_iter as u64,
            scale: p.scale,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Header {
    pub version: u32,
    pub kind: ObjectKind,
    pub params: ParamsBlock,
}

#[derive(Clone, Debug)]
pub enum FabObject {
    Ciphertext(Ciphertext),
    SwitchingKey(SwitchingKey),
    SecretKey(SecretKey),
    EvalKeys(EvalKeys),
}

impl FabObject {
    pub fn kind(&self) -> ObjectKind {
        match self {
            FabObject::Ciphertext(_) => ObjectKind::Ciphertext,
            FabObject::SwitchingKey(_) => ObjectKind::SwitchingKey,
            FabObject::SecretKey(_) => ObjectKind::SecretKey,
            FabObject::EvalKeys(_) => ObjectKind::EvalKeys,
        }
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn poly(&mut self, p: &Poly) {
        self.u64(match p.rep {
            Representation::Coefficient => 0,
            Representation::Evaluation => 1,
        });
        self.u64(p.limbs.len() as u64);
        for &b in &p.basis {
            self.u64(b as u64);
        }
        self.0.reserve(p.limbs.len() * p.n() * 8);
        for limb in &p.limbs {
            for &x in limb {
                self.u64(x);
            }
        }
    }

    fn switching_key(&mut self, k: &SwitchingKey) {
        self.u64(k.galois.unwrap_or(0) as u64);
        self.u64(k.columns.len() as u64);
        match k.seed {
            Some(seed) => {
                self.u64(1);
                self.0.extend_from_slice(&seed);
            }
            None => self.u64(0),
        }
        for [b, a] in &k.columns {
            self.poly(b);
            if k.seed.is_none() {
                self.poly(a);
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let avail = self.buf.len() - self.pos;
        if avail < len {
            return Err(Error::Truncated { needed: len - avail });
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn usize(&mut self, what: &str, max: usize) -> Result<usize> {
        let v = self.u64()?;
        if v > max as u64 {
            return Err(Error::InvalidParams(format!("{what} = {v} exceeds {max}")));
        }
        Ok(v as usize)
    }

    fn poly(&mut self, ctx: &Context) -> Result<Poly> {
        let rep = match self.u64()? {
            0 => Representation::Coefficient,
            1 => Representation::Evaluation,
            other => return Err(Error::InvalidParams(format!("unknown representation {other}"))),
        };
        let total = ctx.ring().moduli().len();
        let count = self.usize("limb count", total)?;
        let mut basis = Vec::with_capacity(count);
        for _ in 0..count {
            basis.push(self.usize("basis index", total - 1)?);
        }
        let n = ctx.n();
        let mut limbs = Vec::with_capacity(count);
        for &b in &basis {
            let q = ctx.ring().modulus(b).value();
            let raw = self.take(n * 8)?;
            let limb: Vec<u64> = raw.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            if limb.iter().any(|&x| x >= q) {
                return Err(Error::InvalidParams(format!("residue out of range for limb {b}")));
            }
            limbs.push(limb);
        }
        Ok(Poly { rep, basis, limbs })
    }

    fn switching_key(&mut self, ctx: &Context) -> Result<SwitchingKey> {
        let g = self.u64()? as usize;
        let dnum = self.usize("key columns", ctx.params().dnum)?;
        let seed = match self.u64()? {
            0 => None,
            1 => Some(<[u8; 32]>::try_from(self.take(32)?).expect("32 bytes")),
            other => return Err(Error::InvalidParams(format!("bad compression flag {other}"))),
        };
        let mut columns = Vec::with_capacity(dnum);
        for j in 0..dnum {
            let b = self.poly(ctx)?;
            let a = match seed {
                Some(s) => sampling::uniform_from_seed(s, j as u64, ctx.ring(), &b.basis),
                None => self.poly(ctx)?,
            };
            columns.push([b, a]);
        }
        Ok(SwitchingKey {
            columns,
            galois: (g != 0).then_some(g),
            seed,
        })
    }
}

fn header(w: &mut Writer, kind: ObjectKind, p: &SchemeParams) {
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u32(kind as u32);
    w.u32(0);
    let b = ParamsBlock::of(p);
    for v in [b.n, b.log_q, b.levels, b.dnum, b.fft_iter] {
        w.u64(v);
    }
    w.f64(b.scale);
}

/// Encodes `obj` for the parameter set `p`.
pub fn to_bytes(obj: &FabObject, p: &SchemeParams) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(HEADER_BYTES));
    header(&mut w, obj.kind(), p);
    match obj {
        FabObject::Ciphertext(ct) => {
            w.f64(ct.scale);
            w.u64(ct.slots as u64);
            w.poly(&ct.c0);
            w.poly(&ct.c1);
        }
        FabObject::SwitchingKey(k) => w.switching_key(k),
        FabObject::SecretKey(sk) => {
            w.u64(sk.coeffs.len() as u64);
            for &c in &sk.coeffs {
                w.u64(c as u64);
            }
        }
        FabObject::EvalKeys(keys) => {
            match &keys.relin {
                Some(k) => {
                    w.u64(1);
                    w.switching_key(k);
                }
                None => w.u64(0),
            }
            w.u64(keys.galois.len() as u64);
            for (&g, k) in &keys.galois {
                w.u64(g as u64);
                w.switching_key(k);
            }
        }
    }
    w.0
}

/// Reads and checks the fixed header.
pub fn read_header(bytes: &[u8]) -> Result<Header> {
    let mut r = Reader { buf: bytes, pos: 0 };
    header_from(&mut r)
}

fn header_from(r: &mut Reader<'_>) -> Result<Header> {
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let kind = ObjectKind::from_u32(r.u32()?)?;
    r.u32()?;
    let params = ParamsBlock {
        n: r.u64()?,
        log_q: r.u64()?,
        levels: r.u64()?,
        dnum: r.u64()?,
        fft_iter: r.u64()?,
        scale: r.f64()?,
    };
    Ok(Header { version, kind, params })
}

/// Decodes an object, rejecting files written for other parameters.
pub fn from_bytes(bytes: &[u8], ctx: &Context) -> Result<FabObject> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let h = header_from(&mut r)?;
    let want = ParamsBlock::of(ctx.params());
    if h.params != want {
        return Err(Error::ParamsMismatch(format!("file has {:?}, context has {want:?}", h.params)));
    }
    let obj = match h.kind {
        ObjectKind::Ciphertext => {
            let scale = r.f64()?;
            let slots = r.usize("slots", ctx.n() / 2)?;
            let c0 = r.poly(ctx)?;
            let c1 = r.poly(ctx)?;
            FabObject::Ciphertext(Ciphertext { c0, c1, scale, slots })
        }
        ObjectKind::SwitchingKey => FabObject::SwitchingKey(r.switching_key(ctx)?),
        ObjectKind::SecretKey => {
            let n = r.usize("secret length", ctx.n())?;
            let mut coeffs = Vec::with_capacity(n);
            for _ in 0..n {
                coeffs.push(r.u64()? as i64);
            }
            FabObject::SecretKey(SecretKey::from_coeffs(ctx, coeffs))
        }
        ObjectKind::EvalKeys => {
            let relin = match r.u64()? {
                0 => None,
                _ => Some(r.switching_key(ctx)?),
            };
            let count = r.usize("galois keys", ctx.n())?;
            let mut galois = BTreeMap::new();
            for _ in 0..count {
                let g = r.u64()? as usize;
                galois.insert(g, r.switching_key(ctx)?);
            }
            FabObject::EvalKeys(EvalKeys { relin, galois })
        }
    };
    if r.pos != bytes.len() {
        return Err(Error::InvalidParams(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(obj)
}

pub fn write_file(path: &std::path::Path, obj: &FabObject, p: &SchemeParams) -> Result<u64> {
    let bytes = to_bytes(obj, p);
    std::fs::write(path, &bytes)?;
    Ok(bytes.len() as u64)
}

pub fn read_file(path: &std::path::Path, ctx: &Context) -> Result<FabObject> {
    from_bytes(&std::fs::read(path)?, ctx)
}
