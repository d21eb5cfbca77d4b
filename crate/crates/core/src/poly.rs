//! Ring elements stored as limb-major residue matrices.

use crate::error::{Error, Result};
use crate::ntt::{ntt_forward, ntt_inverse, TwiddleTable};
use crate::rns::Modulus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Representation {
    Coefficient,
    Evaluation,
}

/// One element of `Z_Q[X]/(X^N + 1)`. `basis[i]` is the ring-wide index of the
/// modulus for `limbs[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub rep: Representation,
    pub basis: Vec<usize>,
    pub limbs: Vec<Vec<u64>>,
}

impl Poly {
    pub fn n(&self) -> usize {
        self.limbs.first().map_or(0, Vec::len)
    }

    pub fn limb_count(&self) -> usize {
        self.limbs.len()
    }

    /// Keeps only the first `count` limbs.
    pub fn truncate(&mut self, count: usize) {
        self.limbs.truncate(count);
        self.basis.truncate(count);
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|l| l.iter().all(|&x| x == 0))
    }
}

/// All moduli (ciphertext chain followed by the extension limbs) with their
/// transform tables.
#[derive(Clone, Debug)]
pub struct Ring {
    n: usize,
    moduli: Vec<Modulus>,
    tables: Vec<TwiddleTable>,
}

impl Ring {
    pub fn new(n: usize, moduli: Vec<Modulus>) -> Result<Self> {
        let tables = moduli
            .iter()
            .map(|m| TwiddleTable::new(m, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, moduli, tables })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    pub fn modulus(&self, idx: usize) -> &Modulus {
        &self.moduli[idx]
    }

    pub fn table(&self, idx: usize) -> &TwiddleTable {
        &self.tables[idx]
    }

    pub fn zero(&self, basis: &[usize], rep: Representation) -> Poly {
        Poly {
            rep,
            basis: basis.to_vec(),
            limbs: vec![vec![0u64; self.n]; basis.len()],
        }
    }

    /// Reduces signed integer coefficients into every limb of `basis`.
    pub fn from_signed(&self, coeffs: &[i64], basis: &[usize]) -> Poly {
        assert_eq!(coeffs.len(), self.n);
        let limbs = basis
            .iter()
            .map(|&b| {
                let m = &self.moduli[b];
                coeffs.iter().map(|&c| m.from_i64(c)).collect()
            })
            .collect();
        Poly {
            rep: Representation::Coefficient,
            basis: basis.to_vec(),
            limbs,
        }
    }

    /// Same as [`Ring::from_signed`] for 128-bit coefficients.
    pub fn from_wide(&self, coeffs: &[i128], basis: &[usize]) -> Poly {
        assert_eq!(coeffs.len(), self.n);
        let limbs = basis
            .iter()
            .map(|&b| {
                let m = &self.moduli[b];
                coeffs.iter().map(|&c| m.from_i128(c)).collect()
            })
            .collect();
        Poly {
            rep: Representation::Coefficient,
            basis: basis.to_vec(),
            limbs,
        }
    }

    pub fn ntt_limb(&self, limb: &mut [u64], idx: usize) {
        ntt_forward(limb, &self.moduli[idx], &self.tables[idx]).expect("limb length equals N");
    }

    pub fn intt_limb(&self, limb: &mut [u64], idx: usize) {
        ntt_inverse(limb, &self.moduli[idx], &self.tables[idx]).expect("limb length equals N");
    }

    pub fn ntt(&self, p: &mut Poly) -> Result<()> {
        if p.rep != Representation::Coefficient {
            return Err(Error::Representation("forward NTT"));
        }
        for (limb, &b) in p.limbs.iter_mut().zip(&p.basis) {
            ntt_forward(limb, &self.moduli[b], &self.tables[b])?;
        }
        p.rep = Representation::Evaluation;
        Ok(())
    }

    pub fn intt(&self, p: &mut Poly) -> Result<()> {
        if p.rep != Representation::Evaluation {
            return Err(Error::Representation("inverse NTT"));
        }
        for (limb, &b) in p.limbs.iter_mut().zip(&p.basis) {
            ntt_inverse(limb, &self.moduli[b], &self.tables[b])?;
        }
        p.rep = Representation::Coefficient;
        Ok(())
    }

    pub fn to_eval(&self, mut p: Poly) -> Poly {
        if p.rep == Representation::Coefficient {
            self.ntt(&mut p).expect("checked representation");
        }
        p
    }

    pub fn to_coeff(&self, mut p: Poly) -> Poly {
        if p.rep == Representation::Evaluation {
            self.intt(&mut p).expect("checked representation");
        }
        p
    }

    fn check_pair(a: &Poly, b: &Poly) -> Result<()> {
        if a.rep != b.rep {
            return Err(Error::Representation("binary operation"));
        }
        if a.basis.len() > b.basis.len() || a.basis[..] != b.basis[..a.basis.len()] {
            return Err(Error::LevelMismatch(a.limb_count(), b.limb_count()));
        }
        Ok(())
    }

    /// `a += b` over the limbs of `a`; `b` may carry extra trailing limbs.
    pub fn add_assign(&self, a: &mut Poly, b: &Poly) -> Result<()> {
        Self::check_pair(a, b)?;
        for ((x, y), &idx) in a.limbs.iter_mut().zip(&b.limbs).zip(&a.basis) {
            let q = self.moduli[idx].value();
            for (u, &v) in x.iter_mut().zip(y) {
                let s = *u + v;
                *u = s.min(s.wrapping_sub(q));
            }
        }
        Ok(())
    }

    pub fn sub_assign(&self, a: &mut Poly, b: &Poly) -> Result<()> {
        Self::check_pair(a, b)?;
        for ((x, y), &idx) in a.limbs.iter_mut().zip(&b.limbs).zip(&a.basis) {
            let q = self.moduli[idx].value();
            for (u, &v) in x.iter_mut().zip(y) {
                let d = *u + q - v;
                *u = d.min(d.wrapping_sub(q));
            }
        }
        Ok(())
    }

    pub fn neg_assign(&self, a: &mut Poly) {
        for (x, &idx) in a.limbs.iter_mut().zip(&a.basis) {
            let m = &self.moduli[idx];
            for u in x.iter_mut() {
                *u = m.neg(*u);
            }
        }
    }

    /// Pointwise product in the evaluation domain, over the limbs of `a`.
    pub fn mul_assign(&self, a: &mut Poly, b: &Poly) -> Result<()> {
        Self::check_pair(a, b)?;
        if a.rep != Representation::Evaluation {
            return Err(Error::Representation("pointwise product"));
        }
        for ((x, y), &idx) in a.limbs.iter_mut().zip(&b.limbs).zip(&a.basis) {
            let m = &self.moduli[idx];
            for (u, &v) in x.iter_mut().zip(y) {
                *u = m.mul(*u, v);
            }
        }
        Ok(())
    }

    pub fn mul(&self, a: &Poly, b: &Poly) -> Result<Poly> {
        let mut out = a.clone();
        self.mul_assign(&mut out, b)?;
        Ok(out)
    }

    pub fn add(&self, a: &Poly, b: &Poly) -> Result<Poly> {
        let mut out = a.clone();
        self.add_assign(&mut out, b)?;
        Ok(out)
    }

    pub fn sub(&self, a: &Poly, b: &Poly) -> Result<Poly> {
        let mut out = a.clone();
        self.sub_assign(&mut out, b)?;
        Ok(out)
    }

    /// `acc += a ⊙ b` in the evaluation domain.
    pub fn mul_add_assign(&self, acc: &mut Poly, a: &Poly, b: &Poly) -> Result<()> {
        Self::check_pair(acc, a)?;
        Self::check_pair(acc, b)?;
        for (((z, x), y), &idx) in acc.limbs.iter_mut().zip(&a.limbs).zip(&b.limbs).zip(&acc.basis) {
            let m = &self.moduli[idx];
            let q = m.value();
            for ((u, &s), &t) in z.iter_mut().zip(x).zip(y) {
                let r = *u + m.mul(s, t);
                *u = r.min(r.wrapping_sub(q));
            }
        }
        Ok(())
    }

    /// Multiplies limb `i` by `scalars[i]`.
    pub fn mul_scalar_assign(&self, a: &mut Poly, scalars: &[u64]) {
        for ((x, &idx), &c) in a.limbs.iter_mut().zip(&a.basis).zip(scalars) {
            let m = &self.moduli[idx];
            let cs = m.shoup(c);
            for u in x.iter_mut() {
                *u = m.mul_shoup(*u, c, cs);
            }
        }
    }

    /// Multiplies by a signed integer constant.
    pub fn mul_int_assign(&self, a: &mut Poly, c: i64) {
        let scalars: Vec<u64> = a.basis.iter().map(|&b| self.moduli[b].from_i64(c)).collect();
        self.mul_scalar_assign(a, &scalars);
    }

    /// Multiplies by the monomial `X^k` (any representation).
    pub fn mul_monomial(&self, a: &Poly, k: usize) -> Poly {
        let n = self.n;
        let k = k % (2 * n);
        match a.rep {
            Representation::Coefficient => {
                let mut out = self.zero(&a.basis, a.rep);
                for ((dst, src), &idx) in out.limbs.iter_mut().zip(&a.limbs).zip(&a.basis) {
                    let m = &self.moduli[idx];
                    for (j, &c) in src.iter().enumerate() {
                        let t = (j + k) % (2 * n);
                        if t < n {
                            dst[t] = c;
                        } else {
                            dst[t - n] = m.neg(c);
                        }
                    }
                }
                out
            }
            Representation::Evaluation => {
                let mut out = a.clone();
                for (x, &idx) in out.limbs.iter_mut().zip(&a.basis) {
                    let m = &self.moduli[idx];
                    let psi = self.tables[idx].psi();
                    // Value of X^k at ψ^{2i+1}.
                    let step = m.pow(psi, 2 * k as u64);
                    let mut w = m.pow(psi, k as u64);
                    for u in x.iter_mut() {
                        *u = m.mul(*u, w);
                        w = m.mul(w, step);
                    }
                }
                out
            }
        }
    }

    /// `X ↦ X^g` for odd `g`.
    pub fn automorphism(&self, a: &Poly, g: usize) -> Poly {
        let n = self.n;
        debug_assert!(g % 2 == 1);
        let g = g % (2 * n);
        let mut out = self.zero(&a.basis, a.rep);
        match a.rep {
            Representation::Evaluation => {
                let perm = eval_permutation(n, g);
                for (dst, src) in out.limbs.iter_mut().zip(&a.limbs) {
                    for (d, &p) in dst.iter_mut().zip(&perm) {
                        *d = src[p];
                    }
                }
            }
            Representation::Coefficient => {
                for ((dst, src), &idx) in out.limbs.iter_mut().zip(&a.limbs).zip(&a.basis) {
                    let m = &self.moduli[idx];
                    for (j, &c) in src.iter().enumerate() {
                        let t = (j * g) % (2 * n);
                        if t < n {
                            dst[t] = c;
                        } else {
                            dst[t - n] = m.neg(c);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Source index for each evaluation slot under `X ↦ X^g`:
/// `out[i] = in[(g·i + (g-1)/2) mod N]`. The reduction is a mask since `N` is a
/// power of two.
pub fn eval_permutation(n: usize, g: usize) -> Vec<usize> {
    let mask = n - 1;
    let half = (g - 1) / 2;
    (0..n).map(|i| (g.wrapping_mul(i) + half) & mask).collect()
}
