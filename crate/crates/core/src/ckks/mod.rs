//! RNS-CKKS: encoding, encryption and homomorphic evaluation.

pub mod evaluator;
pub mod keys;
pub mod sampling;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::params::Context;
use crate::poly::Poly;

pub use evaluator::Evaluator;
pub use keys::{
    galois_for_conjugation, galois_for_rotation, EvalKeys, KeyGenerator, PublicKey, SecretKey,
};

/// Encoded message: an integer polynomial in evaluation form plus its scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Plaintext {
    pub poly: Poly,
    pub scale: f64,
    pub slots: usize,
}

/// `(c0, c1)` with `c0 + c1·s ≈ scale·m`, both in evaluation form.
#[derive(Clone, Debug, PartialEq)]
pub struct Ciphertext {
    pub c0: Poly,
    pub c1: Poly,
    pub scale: f64,
    pub slots: usize,
}

impl Ciphertext {
    /// Current number of limbs.
    pub fn limbs(&self) -> usize {
        self.c0.limb_count()
    }

    /// Multiplications left before the last limb.
    pub fn level(&self) -> usize {
        self.limbs().saturating_sub(1)
    }

    /// Drops trailing limbs; the encrypted value and scale are unchanged.
    pub fn drop_to(&mut self, limbs: usize) {
        self.c0.truncate(limbs);
        self.c1.truncate(limbs);
    }
}

/// Encodes `values` at `scale` over the first `limbs` ciphertext limbs.
pub fn encode(ctx: &Context, values: &[Complex64], scale: f64, limbs: usize) -> Result<Plaintext> {
    if limbs == 0 || limbs > ctx.q_limbs() {
        return Err(Error::InvalidParams(format!("cannot encode over {limbs} limbs")));
    }
    let coeffs = ctx.encoder().encode(values, scale)?;
    let poly = ctx.ring().to_eval(ctx.ring().from_wide(&coeffs, &ctx.q_basis(limbs)));
    Ok(Plaintext {
        poly,
        scale,
        slots: values.len(),
    })
}

pub fn encode_real(ctx: &Context, values: &[f64], scale: f64, limbs: usize) -> Result<Plaintext> {
    let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    encode(ctx, &v, scale, limbs)
}

pub fn decode(ctx: &Context, pt: &Plaintext) -> Result<Vec<Complex64>> {
    let coeffs = ctx.lift_centered(&pt.poly);
    ctx.encoder().decode(&coeffs, pt.slots, pt.scale)
}

/// Public-key encryption.
pub fn encrypt<R: Rng>(ctx: &Context, pk: &PublicKey, pt: &Plaintext, rng: &mut R) -> Result<Ciphertext> {
    let limbs = pt.poly.limb_count();
    if limbs == 0 {
        return Err(Error::InvalidParams("cannot encrypt at zero limbs".into()));
    }
    let ring = ctx.ring();
    let basis = ctx.q_basis(limbs);
    let n = ctx.n();
    let sigma = ctx.params().sigma;
    let u = ring.to_eval(ring.from_signed(&sampling::ternary(rng, n), &basis));
    let e0 = ring.to_eval(ring.from_signed(&sampling::gaussian(rng, n, sigma), &basis));
    let e1 = ring.to_eval(ring.from_signed(&sampling::gaussian(rng, n, sigma), &basis));
    let mut b = pk.b.clone();
    b.truncate(limbs);
    let mut a = pk.a.clone();
    a.truncate(limbs);
    let mut c0 = ring.mul(&b, &u)?;
    ring.add_assign(&mut c0, &e0)?;
    ring.add_assign(&mut c0, &pt.poly)?;
    let mut c1 = ring.mul(&a, &u)?;
    ring.add_assign(&mut c1, &e1)?;
    Ok(Ciphertext {
        c0,
        c1,
        scale: pt.scale,
        slots: pt.slots,
    })
}

/// Secret-key encryption (smaller noise).
pub fn encrypt_sk<R: Rng>(ctx: &Context, sk: &SecretKey, pt: &Plaintext, rng: &mut R) -> Result<Ciphertext> {
    let limbs = pt.poly.limb_count();
    if limbs == 0 {
        return Err(Error::InvalidParams("cannot encrypt at zero limbs".into()));
    }
    let ring = ctx.ring();
    let basis = ctx.q_basis(limbs);
    let c1 = sampling::uniform(rng, ring, &basis);
    let e = sampling::gaussian(rng, ctx.n(), ctx.params().sigma);
    let mut c0 = ring.to_eval(ring.from_signed(&e, &basis));
    ring.add_assign(&mut c0, &pt.poly)?;
    let as_ = ring.mul(&c1, &sk.poly)?;
    ring.sub_assign(&mut c0, &as_)?;
    Ok(Ciphertext {
        c0,
        c1,
        scale: pt.scale,
        slots: pt.slots,
    })
}

/// `c0 + c1·s`; allowed at any level including the last limb.
pub fn decrypt(ctx: &Context, sk: &SecretKey, ct: &Ciphertext) -> Result<Plaintext> {
    let ring = ctx.ring();
    let mut m = ring.mul(&ct.c1, &sk.poly)?;
    ring.add_assign(&mut m, &ct.c0)?;
    Ok(Plaintext {
        poly: m,
        scale: ct.scale,
        slots: ct.slots,
    })
}

pub fn decrypt_decode(ctx: &Context, sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<Complex64>> {
    decode(ctx, &decrypt(ctx, sk, ct)?)
}
