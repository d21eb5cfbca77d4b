use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::sampling;
use crate::keyswitch::{digit_count, digit_range, SwitchingKey};
use crate::params::Context;
use crate::poly::Poly;

/// Ternary secret, kept both as integers and in evaluation form over every limb.
#[derive(Clone, Debug)]
pub struct SecretKey {
    pub coeffs: Vec<i64>,
    pub poly: Poly,
}

impl SecretKey {
    pub fn from_coeffs(ctx: &Context, coeffs: Vec<i64>) -> Self {
        let all: Vec<usize> = (0..ctx.ring().moduli().len()).collect();
        let poly = ctx.ring().to_eval(ctx.ring().from_signed(&coeffs, &all));
        Self { coeffs, poly }
    }

    pub fn hamming_weight(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }
}

/// Encryption of zero under the secret, over the ciphertext limbs.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicKey {
    pub b: Poly,
    pub a: Poly,
}

/// Relinearization and Galois keys.
#[derive(Clone, Debug, Default)]
pub struct EvalKeys {
    pub relin: Option<SwitchingKey>,
    pub galois: BTreeMap<usize, SwitchingKey>,
}

impl EvalKeys {
    pub fn galois_elements(&self) -> Vec<usize> {
        self.galois.keys().copied().collect()
    }
}

/// `5^{-k} mod 2N`: the Galois element moving slot `i` to slot `i + k`.
pub fn galois_for_rotation(n: usize, k: isize) -> usize {
    let half = (n / 2) as isize;
    let e = (-k).rem_euclid(half) as u64;
    crate::rns::pow_mod(5, e, 2 * n as u64) as usize
}

/// `X ↦ X^{-1}`, which conjugates every slot.
pub fn galois_for_conjugation(n: usize) -> usize {
    2 * n - 1
}

pub struct KeyGenerator<'a> {
    ctx: &'a Context,
    rng: ChaCha20Rng,
    compress: bool,
}

impl<'a> KeyGenerator<'a> {
    pub fn new(ctx: &'a Context, seed: u64) -> Self {
        Self {
            ctx,
            rng: ChaCha20Rng::seed_from_u64(seed),
            compress: false,
        }
    }

    /// Derive the `a` rows of switching keys from a stored seed.
    pub fn with_compression(mut self, compress: bool) -> Self {
        self.compress = compress;
        self
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    /// Secret with the weight configured in the parameters (dense by default).
    pub fn secret_key(&mut self) -> SecretKey {
        let n = self.ctx.n();
        let coeffs = match self.ctx.params().secret_weight {
            None => sampling::ternary(&mut self.rng, n),
            Some(h) => sampling::sparse_ternary(&mut self.rng, n, h),
        };
        SecretKey::from_coeffs(self.ctx, coeffs)
    }

    pub fn sparse_secret_key(&mut self, h: usize) -> SecretKey {
        let coeffs = sampling::sparse_ternary(&mut self.rng, self.ctx.n(), h);
        SecretKey::from_coeffs(self.ctx, coeffs)
    }

    fn noise(&mut self, basis: &[usize]) -> Poly {
        let e = sampling::gaussian(&mut self.rng, self.ctx.n(), self.ctx.params().sigma);
        self.ctx.ring().to_eval(self.ctx.ring().from_signed(&e, basis))
    }

    pub fn public_key(&mut self, sk: &SecretKey) -> PublicKey {
        let ring = self.ctx.ring();
        let basis = self.ctx.q_basis(self.ctx.q_limbs());
        let a = sampling::uniform(&mut self.rng, ring, &basis);
        let mut b = self.noise(&basis);
        let mut as_ = a.clone();
        ring.mul_assign(&mut as_, &sk.poly).expect("matching basis");
        ring.sub_assign(&mut b, &as_).expect("matching basis");
        PublicKey { b, a }
    }

    /// Key that turns a component multiplied by `from` into one decryptable under `to`.
    pub fn switching_key(&mut self, from: &Poly, to: &SecretKey) -> SwitchingKey {
        let ctx = self.ctx;
        let ring = ctx.ring();
        let ql = ctx.q_limbs();
        let basis = ctx.raised_basis(ql);
        let seed: Option<[u8; 32]> = self.compress.then(|| self.rng.random());
        let columns = (0..digit_count(ql, ctx.alpha()))
            .map(|j| {
                let a = match seed {
                    Some(s) => sampling::uniform_from_seed(s, j as u64, ring, &basis),
                    None => sampling::uniform(&mut self.rng, ring, &basis),
                };
                let mut b = self.noise(&basis);
                let mut as_ = a.clone();
                ring.mul_assign(&mut as_, &to.poly).expect("raised basis");
                ring.sub_assign(&mut b, &as_).expect("raised basis");
                for i in digit_range(j, ctx.alpha(), ql) {
                    let m = ring.modulus(i);
                    let g = ctx.ks_tables().p_mod_q(ring, i);
                    let gs = m.shoup(g);
                    for (x, &s) in b.limbs[i].iter_mut().zip(&from.limbs[i]) {
                        *x = m.add(*x, m.mul_shoup(s, g, gs));
                    }
                }
                [b, a]
            })
            .collect();
        SwitchingKey {
            columns,
            galois: None,
            seed,
        }
    }

    pub fn relin_key(&mut self, sk: &SecretKey) -> SwitchingKey {
        let s2 = self.ctx.ring().mul(&sk.poly, &sk.poly).expect("same basis");
        self.switching_key(&s2, sk)
    }

    pub fn galois_key(&mut self, sk: &SecretKey, g: usize) -> SwitchingKey {
        let sg = self.ctx.ring().automorphism(&sk.poly, g);
        let mut key = self.switching_key(&sg, sk);
        key.galois = Some(g);
        key
    }

    /// Relinearization key plus one Galois key per element.
    pub fn eval_keys(&mut self, sk: &SecretKey, galois: &[usize]) -> EvalKeys {
        let relin = Some(self.relin_key(sk));
        let galois = galois.iter().map(|&g| (g, self.galois_key(sk, g))).collect();
        EvalKeys { relin, galois }
    }
}
