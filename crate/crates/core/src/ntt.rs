//! Negacyclic number theoretic transform over one limb.
//!
//! Both directions run the same iterative Cooley-Tukey kernel. The forward
//! transform pre-twists by powers of the 2N-th root `ψ` and then runs a cyclic
//! transform with `ω = ψ²`; the inverse runs the same kernel with `ω^{-1}` and
//! untwists by `ψ^{-j}·N^{-1}`. Outputs are in natural order:
//! `out[i] = a(ψ^{2i+1})`.

use crate::error::{Error, Result};
use crate::rns::Modulus;

/// Twiddle factors for one modulus, stored in the order the kernel reads them.
///
/// `forward[h + k] = ω^{k·N/(2h)}` for the stage with half-width `h` and `k < h`;
/// slot 0 is padding and holds 1. `inverse` holds the elementwise inverses.
#[derive(Clone, Debug)]
pub struct TwiddleTable {
    n: usize,
    forward: Vec<u64>,
    forward_shoup: Vec<u64>,
    inverse: Vec<u64>,
    inverse_shoup: Vec<u64>,
    twist: Vec<u64>,
    twist_shoup: Vec<u64>,
    /// `ψ^{-j}·N^{-1}`.
    untwist: Vec<u64>,
    untwist_shoup: Vec<u64>,
    n_inv: u64,
}

impl TwiddleTable {
    pub fn new(m: &Modulus, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParams(format!("NTT size {n} is not a power of two")));
        }
        let q = m.value();
        if (q - 1) % (2 * n as u64) != 0 {
            return Err(Error::InvalidParams(format!("{q} has no 2·{n}-th root of unity")));
        }
        // Same search as the modulus constructor, so at matching N this is `ntt_root`.
        let psi = root_of_order(m, 2 * n as u64);
        let omega = m.mul(psi, psi);
        let omega_inv = m.inv(omega);
        let psi_inv = m.inv(psi);
        let n_inv = m.inv(n as u64 % q);

        let mut forward = vec![1u64; n];
        let mut inverse = vec![1u64; n];
        let mut h = 1;
        while h < n {
            let step = (n / (2 * h)) as u64;
            let (w, wi) = (m.pow(omega, step), m.pow(omega_inv, step));
            let (mut x, mut xi) = (1u64, 1u64);
            for k in 0..h {
                forward[h + k] = x;
                inverse[h + k] = xi;
                x = m.mul(x, w);
                xi = m.mul(xi, wi);
            }
            h *= 2;
        }
        let mut twist = Vec::with_capacity(n);
        let mut untwist = Vec::with_capacity(n);
        let (mut x, mut y) = (1u64, n_inv);
        for _ in 0..n {
            twist.push(x);
            untwist.push(y);
            x = m.mul(x, psi);
            y = m.mul(y, psi_inv);
        }
        let shoup = |v: &[u64]| v.iter().map(|&w| m.shoup(w)).collect::<Vec<_>>();
        Ok(Self {
            n,
            forward_shoup: shoup(&forward),
            inverse_shoup: shoup(&inverse),
            twist_shoup: shoup(&twist),
            untwist_shoup: shoup(&untwist),
            forward,
            inverse,
            twist,
            untwist,
            n_inv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self) -> &[u64] {
        &self.forward
    }

    pub fn inverse(&self) -> &[u64] {
        &self.inverse
    }

    pub fn n_inv(&self) -> u64 {
        self.n_inv
    }

    /// The primitive 2N-th root used for the twist.
    pub fn psi(&self) -> u64 {
        self.twist[1]
    }
}

/// A primitive root of the requested (power-of-two) order dividing `q - 1`.
fn root_of_order(m: &Modulus, order: u64) -> u64 {
    let q = m.value();
    (2..q)
        .map(|g| m.pow(g, (q - 1) / order))
        .find(|&x| m.pow(x, order / 2) == q - 1)
        .expect("order divides q - 1")
}

/// In-place bit-reversal permutation.
pub fn bit_reverse(a: &mut [u64]) {
    let n = a.len();
    let shift = usize::BITS - n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if i < j {
            a.swap(i, j);
        }
    }
}

#[inline]
fn cooley_tukey(a: &mut [u64], m: &Modulus, w: &[u64], ws: &[u64]) {
    let n = a.len();
    let q = m.value();
    bit_reverse(a);
    let mut h = 1;
    while h < n {
        let (tw, tws) = (&w[h..2 * h], &ws[h..2 * h]);
        for block in a.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (((x, y), &t), &ts) in lo.iter_mut().zip(hi.iter_mut()).zip(tw).zip(tws) {
                let u = *x;
                let v = m.mul_shoup(*y, t, ts);
                let s = u + v;
                *x = s.min(s.wrapping_sub(q));
                let d = u + q - v;
                *y = d.min(d.wrapping_sub(q));
            }
        }
        h *= 2;
    }
}

fn check(a: &[u64], tw: &TwiddleTable) -> Result<()> {
    if a.len() != tw.n {
        return Err(Error::DegreeMismatch {
            expected: tw.n,
            got: a.len(),
        });
    }
    Ok(())
}

/// Coefficients to evaluations at `ψ^{2i+1}`, in place.
pub fn ntt_forward(a: &mut [u64], m: &Modulus, tw: &TwiddleTable) -> Result<()> {
    check(a, tw)?;
    for ((x, &t), &ts) in a.iter_mut().zip(&tw.twist).zip(&tw.twist_shoup) {
        *x = m.mul_shoup(*x, t, ts);
    }
    cooley_tukey(a, m, &tw.forward, &tw.forward_shoup);
    Ok(())
}

/// Exact inverse of [`ntt_forward`], including the `N^{-1}` factor.
pub fn ntt_inverse(a: &mut [u64], m: &Modulus, tw: &TwiddleTable) -> Result<()> {
    check(a, tw)?;
    cooley_tukey(a, m, &tw.inverse, &tw.inverse_shoup);
    for ((x, &t), &ts) in a.iter_mut().zip(&tw.untwist).zip(&tw.untwist_shoup) {
        *x = m.mul_shoup(*x, t, ts);
    }
    Ok(())
}

/// Schoolbook product in `Z_q[X]/(X^N + 1)`.
pub fn negacyclic_mul_schoolbook(a: &[u64], b: &[u64], m: &Modulus) -> Vec<u64> {
    let n = a.len();
    let mut out = vec![0u64; n];
    for i in 0..n {
        for j in 0..n {
            let p = m.mul(a[i], b[j]);
            let k = i + j;
            if k < n {
                out[k] = m.add(out[k], p);
            } else {
                out[k - n] = m.sub(out[k - n], p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rns::generate_modulus_chain;

    #[test]
    fn constant_maps_to_constant() {
        let m = Modulus::new(257, 16, 6, 0).unwrap();
        let tw = TwiddleTable::new(&m, 16).unwrap();
        let mut a = vec![0u64; 16];
        a[0] = 42;
        ntt_forward(&mut a, &m, &tw).unwrap();
        assert!(a.iter().all(|&x| x == 42));
    }

    #[test]
    fn evaluates_at_odd_powers() {
        let m = Modulus::new(17, 8, 6, 0).unwrap();
        let tw = TwiddleTable::new(&m, 8).unwrap();
        let a: Vec<u64> = vec![3, 1, 4, 1, 5, 9, 2, 6];
        let mut e = a.clone();
        ntt_forward(&mut e, &m, &tw).unwrap();
        let psi = tw.psi();
        for (i, &v) in e.iter().enumerate() {
            let x = m.pow(psi, 2 * i as u64 + 1);
            let direct = a.iter().rev().fold(0, |acc, &c| m.add(m.mul(acc, x), c));
            assert_eq!(v, direct);
        }
    }

    #[test]
    fn table_invariants() {
        let m = &generate_modulus_chain(1 << 10, 1, 30, 6).unwrap()[0];
        let tw = TwiddleTable::new(m, 1 << 10).unwrap();
        assert_eq!(tw.forward()[0], 1);
        assert_eq!(tw.forward().len(), 1 << 10);
        for (f, i) in tw.forward().iter().zip(tw.inverse()) {
            assert_eq!(m.mul(*f, *i), 1);
        }
    }

    #[test]
    fn rejects_wrong_length() {
        let m = Modulus::new(257, 16, 6, 0).unwrap();
        let tw = TwiddleTable::new(&m, 16).unwrap();
        let mut a = vec![0u64; 8];
        assert!(ntt_forward(&mut a, &m, &tw).is_err());
    }
}
