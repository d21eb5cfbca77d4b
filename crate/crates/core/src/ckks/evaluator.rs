use std::cell::{Cell, RefCell};

use num_complex::Complex64;

use super::keys::{galois_for_conjugation, galois_for_rotation, EvalKeys};
use super::{Ciphertext, Plaintext};
use crate::error::{Error, Result};
use crate::keyswitch::{key_switch, Datapath, OpCounters, SwitchingKey};
use crate::params::Context;
use crate::perf::trace::{OpKind, OpTrace};
use crate::poly::{Poly, Representation};

/// Relative tolerance when comparing scales of operands.
pub const SCALE_TOLERANCE: f64 = 1e-9;

/// Homomorphic operations. Every multiplication is followed by a rescale.
pub struct Evaluator<'a> {
    ctx: &'a Context,
    keys: &'a EvalKeys,
    datapath: Datapath,
    counters: Cell<OpCounters>,
    keyswitches: Cell<u64>,
    trace: RefCell<Option<OpTrace>>,
}

fn scales_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= SCALE_TOLERANCE * a.abs().max(b.abs())
}

impl<'a> Evaluator<'a> {
    pub fn new(ctx: &'a Context, keys: &'a EvalKeys) -> Self {
        Self {
            ctx,
            keys,
            datapath: Datapath::Modified,
            counters: Cell::new(OpCounters::default()),
            keyswitches: Cell::new(0),
            trace: RefCell::new(None),
        }
    }

    pub fn with_datapath(mut self, datapath: Datapath) -> Self {
        self.datapath = datapath;
        self
    }

    pub fn ctx(&self) -> &'a Context {
        self.ctx
    }

    pub fn keys(&self) -> &'a EvalKeys {
        self.keys
    }

    /// Key-switching work accumulated so far.
    pub fn counters(&self) -> OpCounters {
        self.counters.get()
    }

    pub fn keyswitch_count(&self) -> u64 {
        self.keyswitches.get()
    }

    pub fn reset_counters(&self) {
        self.counters.set(OpCounters::default());
        self.keyswitches.set(0);
    }

    /// Starts recording every operation into a fresh trace.
    pub fn start_trace(&self) {
        *self.trace.borrow_mut() = Some(OpTrace::new(self.ctx.params().limb_bits));
    }

    /// Stops recording and returns what was recorded.
    pub fn take_trace(&self) -> Option<OpTrace> {
        self.trace.borrow_mut().take()
    }

    fn record(&self, kind: OpKind, limbs: usize) {
        if let Some(t) = self.trace.borrow_mut().as_mut() {
            t.push(kind, limbs, self.ctx.n(), self.ctx.alpha(), self.datapath);
        }
    }

    /// Applies a switching key to one component.
    pub fn switch_key(&self, part: &Poly, key: &SwitchingKey) -> Result<(Poly, Poly)> {
        self.record(OpKind::KeySwitch, part.limb_count());
        let mut c = self.counters.get();
        let out = key_switch(self.ctx, part, key, self.datapath, &mut c)?;
        self.counters.set(c);
        self.keyswitches.set(self.keyswitches.get() + 1);
        Ok(out)
    }

    fn align(&self, a: &Ciphertext, b: &Ciphertext) -> Result<(Ciphertext, Ciphertext)> {
        if a.c0.n() != b.c0.n() {
            return Err(Error::DegreeMismatch {
                expected: a.c0.n(),
                got: b.c0.n(),
            });
        }
        let limbs = a.limbs().min(b.limbs());
        let (mut a, mut b) = (a.clone(), b.clone());
        a.drop_to(limbs);
        b.drop_to(limbs);
        Ok((a, b))
    }

    /// Slotwise sum. Operands at different levels are brought to the lower one.
    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        if !scales_match(a.scale, b.scale) {
            return Err(Error::ScaleMismatch(a.scale, b.scale));
        }
        let (mut a, b) = self.align(a, b)?;
        self.record(OpKind::Add, a.limbs());
        let ring = self.ctx.ring();
        ring.add_assign(&mut a.c0, &b.c0)?;
        ring.add_assign(&mut a.c1, &b.c1)?;
        Ok(a)
    }

    pub fn sub(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        if !scales_match(a.scale, b.scale) {
            return Err(Error::ScaleMismatch(a.scale, b.scale));
        }
        let (mut a, b) = self.align(a, b)?;
        self.record(OpKind::Add, a.limbs());
        let ring = self.ctx.ring();
        ring.sub_assign(&mut a.c0, &b.c0)?;
        ring.sub_assign(&mut a.c1, &b.c1)?;
        Ok(a)
    }

    pub fn neg(&self, a: &Ciphertext) -> Ciphertext {
        self.record(OpKind::Scalar, a.limbs());
        let mut out = a.clone();
        self.ctx.ring().neg_assign(&mut out.c0);
        self.ctx.ring().neg_assign(&mut out.c1);
        out
    }

    /// Sum of operands whose scales may differ: the lower-scale operand is
    /// lifted with a constant multiplication so both land on the smaller
    /// common scale after rescaling.
    pub fn add_auto(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        if scales_match(a.scale, b.scale) {
            return self.add(a, b);
        }
        let limbs = a.limbs().min(b.limbs());
        if limbs < 2 {
            return Err(Error::NeedsBootstrapping { op: "scale adjustment", limbs });
        }
        let (mut a, mut b) = (a.clone(), b.clone());
        a.drop_to(limbs);
        b.drop_to(limbs);
        let target = a.scale.min(b.scale);
        let a = self.mul_const(&a, Complex64::new(1.0, 0.0), target)?;
        let b = self.mul_const(&b, Complex64::new(1.0, 0.0), target)?;
        self.add(&a, &b)
    }

    pub fn add_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
        if !scales_match(a.scale, pt.scale) {
            return Err(Error::ScaleMismatch(a.scale, pt.scale));
        }
        self.record(OpKind::AddPlain, a.limbs());
        let mut out = a.clone();
        self.ctx.ring().add_assign(&mut out.c0, &pt.poly)?;
        Ok(out)
    }

    /// Integer coefficients of `c·scale` placed on `1` and `X^{N/2}`, which
    /// evaluates to `c` in every slot.
    fn constant_poly(&self, c: Complex64, scale: f64, limbs: usize) -> Result<Poly> {
        let n = self.ctx.n();
        let (re, im) = ((c.re * scale).round(), (c.im * scale).round());
        if re.abs() >= 2f64.powi(126) || im.abs() >= 2f64.powi(126) {
            return Err(Error::EncodingOverflow(format!("constant {c} at scale {scale:e}")));
        }
        let mut coeffs = vec![0i128; n];
        coeffs[0] = re as i128;
        coeffs[n / 2] = im as i128;
        let ring = self.ctx.ring();
        Ok(ring.to_eval(ring.from_wide(&coeffs, &self.ctx.q_basis(limbs))))
    }

    /// Adds the same complex constant to every slot.
    pub fn add_const(&self, a: &Ciphertext, c: Complex64) -> Result<Ciphertext> {
        let p = self.constant_poly(c, a.scale, a.limbs())?;
        self.record(OpKind::AddPlain, a.limbs());
        let mut out = a.clone();
        self.ctx.ring().add_assign(&mut out.c0, &p)?;
        Ok(out)
    }

    /// Multiplies by a small integer; no level is consumed.
    pub fn mul_int(&self, a: &Ciphertext, k: i64) -> Ciphertext {
        self.record(OpKind::Scalar, a.limbs());
        let mut out = a.clone();
        self.ctx.ring().mul_int_assign(&mut out.c0, k);
        self.ctx.ring().mul_int_assign(&mut out.c1, k);
        out
    }

    /// Multiplies every slot by `i`; no level is consumed.
    pub fn mul_i(&self, a: &Ciphertext) -> Ciphertext {
        self.record(OpKind::Scalar, a.limbs());
        let ring = self.ctx.ring();
        let k = self.ctx.n() / 2;
        Ciphertext {
            c0: ring.mul_monomial(&a.c0, k),
            c1: ring.mul_monomial(&a.c1, k),
            scale: a.scale,
            slots: a.slots,
        }
    }

    /// Scale a constant must be encoded at so that the product rescales to `target`.
    pub fn const_scale_for(&self, a: &Ciphertext, target: f64) -> f64 {
        target * self.ctx.q(a.limbs() - 1) as f64 / a.scale
    }

    /// Multiplies by a complex constant and rescales to exactly `target` scale.
    pub fn mul_const(&self, a: &Ciphertext, c: Complex64, target: f64) -> Result<Ciphertext> {
        let limbs = a.limbs();
        if limbs < 2 {
            return Err(Error::NeedsBootstrapping { op: "constant multiplication", limbs });
        }
        let s = self.const_scale_for(a, target);
        let p = self.constant_poly(c, s, limbs)?;
        let mut out = self.mul_plain_raw(a, &p, s, OpKind::Scalar)?;
        self.rescale_assign(&mut out)?;
        out.scale = target;
        Ok(out)
    }

    /// Multiplies by a constant encoded at scale `s` without rescaling.
    pub fn mul_const_no_rescale(&self, a: &Ciphertext, c: Complex64, s: f64) -> Result<Ciphertext> {
        let p = self.constant_poly(c, s, a.limbs())?;
        self.mul_plain_raw(a, &p, s, OpKind::Scalar)
    }

    fn mul_plain_raw(&self, a: &Ciphertext, p: &Poly, s: f64, kind: OpKind) -> Result<Ciphertext> {
        self.record(kind, a.limbs());
        let ring = self.ctx.ring();
        let mut out = a.clone();
        ring.mul_assign(&mut out.c0, p)?;
        ring.mul_assign(&mut out.c1, p)?;
        out.scale = a.scale * s;
        Ok(out)
    }

    /// Product with a plaintext followed by a rescale.
    pub fn mul_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
        let limbs = a.limbs().min(pt.poly.limb_count());
        if limbs < 2 {
            return Err(Error::NeedsBootstrapping { op: "plaintext multiplication", limbs });
        }
        let mut a = a.clone();
        a.drop_to(limbs);
        let mut out = self.mul_plain_raw(&a, &pt.poly, pt.scale, OpKind::PlainMul)?;
        self.rescale_assign(&mut out)?;
        Ok(out)
    }

    /// Plaintext product without rescaling, for accumulating several terms first.
    pub fn mul_plain_no_rescale(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
        let limbs = a.limbs().min(pt.poly.limb_count());
        let mut a = a.clone();
        a.drop_to(limbs);
        self.mul_plain_raw(&a, &pt.poly, pt.scale, OpKind::PlainMul)
    }

    /// Tensor product and relinearization, without rescaling.
    pub fn mul_no_rescale(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        let (a, b) = self.align(a, b)?;
        let relin = self
            .keys
            .relin
            .as_ref()
            .ok_or_else(|| Error::MissingKey("relinearization".into()))?;
        self.record(OpKind::Tensor, a.limbs());
        let ring = self.ctx.ring();
        let mut d0 = ring.mul(&a.c0, &b.c0)?;
        let mut d1 = ring.mul(&a.c0, &b.c1)?;
        ring.mul_add_assign(&mut d1, &a.c1, &b.c0)?;
        let d2 = ring.mul(&a.c1, &b.c1)?;
        let (kb, ka) = self.switch_key(&d2, relin)?;
        self.record(OpKind::Add, a.limbs());
        ring.add_assign(&mut d0, &kb)?;
        ring.add_assign(&mut d1, &ka)?;
        Ok(Ciphertext {
            c0: d0,
            c1: d1,
            scale: a.scale * b.scale,
            slots: a.slots.max(b.slots),
        })
    }

    /// Ciphertext product; the output has one limb fewer than the lower input.
    pub fn mul(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        let limbs = a.limbs().min(b.limbs());
        if limbs < 2 {
            return Err(Error::NeedsBootstrapping { op: "multiplication", limbs });
        }
        let mut out = self.mul_no_rescale(a, b)?;
        self.rescale_assign(&mut out)?;
        Ok(out)
    }

    pub fn square(&self, a: &Ciphertext) -> Result<Ciphertext> {
        self.mul(a, a)
    }

    /// Divides by the last limb modulus with rounding and drops that limb.
    pub fn rescale_assign(&self, ct: &mut Ciphertext) -> Result<()> {
        let limbs = ct.limbs();
        if limbs < 2 {
            return Err(Error::NeedsBootstrapping { op: "rescale", limbs });
        }
        self.record(OpKind::Rescale, limbs);
        let q_last = self.ctx.q(limbs - 1);
        rescale_poly(self.ctx, &mut ct.c0);
        rescale_poly(self.ctx, &mut ct.c1);
        ct.scale /= q_last as f64;
        Ok(())
    }

    pub fn rescale(&self, ct: &Ciphertext) -> Result<Ciphertext> {
        let mut out = ct.clone();
        self.rescale_assign(&mut out)?;
        Ok(out)
    }

    /// Applies `X ↦ X^g` and switches back to the original key.
    pub fn apply_galois(&self, a: &Ciphertext, g: usize) -> Result<Ciphertext> {
        let g = g % (2 * self.ctx.n());
        if g == 1 {
            return Ok(a.clone());
        }
        let key = self
            .keys
            .galois
            .get(&g)
            .ok_or_else(|| Error::MissingKey(format!("galois element {g}")))?;
        self.record(OpKind::Automorph, a.limbs());
        let ring = self.ctx.ring();
        let mut c0 = ring.automorphism(&a.c0, g);
        let c1 = ring.automorphism(&a.c1, g);
        let (kb, ka) = self.switch_key(&c1, key)?;
        self.record(OpKind::AddPlain, a.limbs());
        ring.add_assign(&mut c0, &kb)?;
        Ok(Ciphertext {
            c0,
            c1: ka,
            scale: a.scale,
            slots: a.slots,
        })
    }

    /// Rotates by `k` slots: slot `i` moves to slot `i + k`.
    pub fn rotate(&self, a: &Ciphertext, k: isize) -> Result<Ciphertext> {
        self.apply_galois(a, galois_for_rotation(self.ctx.n(), k))
    }

    pub fn conjugate(&self, a: &Ciphertext) -> Result<Ciphertext> {
        self.apply_galois(a, galois_for_conjugation(self.ctx.n()))
    }
}

/// Exact RNS rescale of one polynomial in evaluation form.
pub fn rescale_poly(ctx: &Context, p: &mut Poly) {
    debug_assert_eq!(p.rep, Representation::Evaluation);
    let ring = ctx.ring();
    let l = p.limb_count() - 1;
    let mut last = p.limbs.pop().expect("at least two limbs");
    p.basis.pop();
    ring.intt_limb(&mut last, l);
    let ql = ring.modulus(l);
    let half = ql.value() / 2;
    let inv = ctx.rescale_inv(l);
    let mut tmp = vec![0u64; last.len()];
    for (i, limb) in p.limbs.iter_mut().enumerate() {
        let m = ring.modulus(i);
        let q = m.value();
        for (t, &r) in tmp.iter_mut().zip(&last) {
            // Centered lift of the dropped residue.
            *t = if r > half {
                m.sub(r % q, ql.value() % q)
            } else {
                r % q
            };
        }
        ring.ntt_limb(&mut tmp, i);
        let (c, cs) = (inv[i], m.shoup(inv[i]));
        for (x, &t) in limb.iter_mut().zip(&tmp) {
            let d = *x + q - t;
            *x = m.mul_shoup(d.min(d.wrapping_sub(q)), c, cs);
        }
    }
}
