//! Prime-field and residue-number-system arithmetic.
//!
//! Every limb is a word-sized prime `q ≡ 1 (mod 2N)`. Reduction of double-width
//! products uses a shift-and-add scheme: the high half of the operand is shifted
//! left a few bits at a time and the bits that spill past `log q` are folded back
//! in through a small precomputed table (`madd`). No multiplications are needed
//! inside the reduction itself.

use crate::error::{Error, Result};

/// Default number of bits consumed per iteration of the shift-and-add reduction.
pub const DEFAULT_SHIFTS: u32 = 6;

/// Widest limb the arithmetic supports.
pub const MAX_LIMB_BITS: u32 = 54;

/// One NTT-friendly prime limb with its reduction table and root of unity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modulus {
    value: u64,
    bits: u32,
    shifts: u32,
    madd: Vec<u64>,
    /// `madd` with a leading zero so that a zero carry indexes a no-op.
    madd_ext: Vec<u64>,
    full_rounds: u32,
    last_shift: u32,
    ntt_root: u64,
    index: usize,
}

impl Modulus {
    /// Builds a modulus for ring degree `n`. `q` must be prime and `≡ 1 (mod 2n)`.
    pub fn new(q: u64, n: usize, shifts: u32, index: usize) -> Result<Self> {
        if !(1..=8).contains(&shifts) {
            return Err(Error::InvalidParams(format!("shifts = {shifts} outside 1..=8")));
        }
        if q < 3 || !is_prime(q) {
            return Err(Error::InvalidParams(format!("{q} is not an odd prime")));
        }
        let bits = 64 - q.leading_zeros();
        if bits > MAX_LIMB_BITS {
            return Err(Error::InvalidParams(format!("{q} is wider than {MAX_LIMB_BITS} bits")));
        }
        let two_n = 2 * n as u64;
        if !n.is_power_of_two() || (q - 1) % two_n != 0 {
            return Err(Error::InvalidParams(format!("{q} is not 1 mod {two_n}")));
        }
        let madd = precompute_madd(q, bits, shifts);
        let ntt_root = find_primitive_root(q, two_n);
        let madd_ext = std::iter::once(0).chain(madd.iter().copied()).collect();
        Ok(Self {
            value: q,
            bits,
            shifts,
            madd,
            madd_ext,
            full_rounds: bits / shifts,
            last_shift: bits % shifts,
            ntt_root,
            index,
        })
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Bit length of `q` (the `log q` of the reduction).
    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn shifts(&self) -> u32 {
        self.shifts
    }

    pub fn madd(&self) -> &[u64] {
        &self.madd
    }

    /// Primitive `2N`-th root of unity.
    pub fn ntt_root(&self) -> u64 {
        self.ntt_root
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Number of loop iterations the reduction performs.
    pub fn reduce_iterations(&self) -> u32 {
        self.bits.div_ceil(self.shifts)
    }

    /// Reduces `a < 2^(2·log q)` modulo `q` with the shift-and-add loop.
    #[inline]
    pub fn reduce(&self, a: u128) -> u64 {
        debug_assert!(a >> (2 * self.bits) == 0, "reduce input out of range");
        let q = self.value;
        let lq = self.bits;
        let mask = (1u64 << lq) - 1;
        let lo = (a as u64) & mask;
        let hi = (a >> lq) as u64;
        let mut hi = hi.min(hi.wrapping_sub(q));
        // hi < 2^lq holds on entry to every round. The table lookup and
        // conditional subtraction are written branch-free; a zero carry
        // indexes the leading zero entry.
        let step = self.shifts;
        let table = &self.madd_ext;
        let top = table.len() - 1;
        for _ in 0..self.full_rounds {
            let shifted = hi << step;
            hi = (shifted & mask) + table[((shifted >> lq) as usize) & top];
            hi = hi.min(hi.wrapping_sub(q));
        }
        if self.last_shift != 0 {
            let shifted = hi << self.last_shift;
            hi = (shifted & mask) + table[((shifted >> lq) as usize) & top];
            hi = hi.min(hi.wrapping_sub(q));
        }
        // lo < 2^lq < 2q and hi < q, so two conditional subtractions finish.
        let c = hi + lo;
        let c = c.min(c.wrapping_sub(q));
        c.min(c.wrapping_sub(q))
    }

    /// Checked variant of [`Modulus::reduce`].
    pub fn try_reduce(&self, a: u128) -> Result<u64> {
        if a >> (2 * self.bits) != 0 {
            return Err(Error::ReductionRange {
                value: a,
                modulus: self.value,
            });
        }
        Ok(self.reduce(a))
    }

    /// Reduces an arbitrary 128-bit accumulator by applying the loop twice.
    #[inline]
    pub fn reduce_u128(&self, a: u128) -> u64 {
        let lq = self.bits;
        let hi = a >> lq;
        let lo = (a as u64) & ((1u64 << lq) - 1);
        let hi = if hi >> (2 * lq) == 0 {
            self.reduce(hi)
        } else {
            (hi % self.value as u128) as u64
        };
        self.reduce(((hi as u128) << lq) | lo as u128)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.value {
            s - self.value
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.value - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.value - a
        }
    }

    /// Full-width product followed by [`Modulus::reduce`].
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    /// Precomputed quotient for multiplying by the constant `w`.
    #[inline]
    pub fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.value as u128) as u64
    }

    /// `a·w mod q` for a constant `w` with quotient `w_shoup = shoup(w)`.
    #[inline]
    pub fn mul_shoup(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let quot = ((a as u128 * w_shoup as u128) >> 64) as u64;
        let r = a.wrapping_mul(w).wrapping_sub(quot.wrapping_mul(self.value));
        if r >= self.value {
            r - self.value
        } else {
            r
        }
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.value)
    }

    /// Inverse via Fermat; `a` must be nonzero.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a % self.value != 0);
        self.pow(a, self.value - 2)
    }

    /// Maps a signed integer into `[0, q)`.
    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.value as i64);
        r as u64
    }

    /// Centered lift of a residue into `(-q/2, q/2]`.
    #[inline]
    pub fn center(&self, x: u64) -> i64 {
        if x > self.value / 2 {
            x as i64 - self.value as i64
        } else {
            x as i64
        }
    }

    /// Reduces a signed 128-bit integer.
    pub fn from_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.value as i128) as u64
    }
}

/// Precomputes `madd[i-1] = i·2^{log q} mod q` for `i` in `1..2^shifts`, written
/// as the bitwise sum over the bits of `i`.
pub fn precompute_madd(q: u64, log_q: u32, shifts: u32) -> Vec<u64> {
    let count = (1usize << shifts) - 1;
    let pow2: Vec<u64> = (0..shifts)
        .map(|j| ((1u128 << (log_q + j)) % q as u128) as u64)
        .collect();
    (1..=count)
        .map(|i| {
            let mut acc = 0u64;
            for (j, p) in pow2.iter().enumerate() {
                if (i >> j) & 1 == 1 {
                    acc = ((acc as u128 + *p as u128) % q as u128) as u64;
                }
            }
            acc
        })
        .collect()
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = (x as u128 * x as u128 % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn find_primitive_root(q: u64, order: u64) -> u64 {
    let cofactor = (q - 1) / order;
    (2..q)
        .map(|g| pow_mod(g, cofactor, q))
        .find(|&x| pow_mod(x, order / 2, q) == q - 1)
        .expect("a prime 1 mod 2N has a primitive 2N-th root")
}

/// Generates `count` distinct primes of exactly `bits` bits with `q ≡ 1 (mod 2n)`,
/// scanning downward from `2^bits`.
pub fn generate_modulus_chain(n: usize, count: usize, bits: u32, shifts: u32) -> Result<Vec<Modulus>> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::InvalidParams(format!("ring degree {n} is not a power of two")));
    }
    if bits > MAX_LIMB_BITS || bits < 2 || count == 0 {
        return Err(Error::InvalidParams(format!("cannot generate {count} primes of {bits} bits")));
    }
    let step = 2 * n as u64;
    let top = 1u64 << bits;
    let floor = 1u64 << (bits - 1);
    let mut primes = Vec::with_capacity(count);
    // Largest candidate of the form k·2N + 1 below 2^bits.
    let mut cand = ((top - 1) / step) * step + 1;
    while cand >= floor && primes.len() < count {
        if cand < top && is_prime(cand) {
            primes.push(cand);
        }
        if cand < step {
            break;
        }
        cand -= step;
    }
    if primes.len() < count {
        return Err(Error::InsufficientPrimes {
            wanted: count,
            found: primes.len(),
            bits,
            step,
        });
    }
    primes
        .into_iter()
        .enumerate()
        .map(|(i, q)| Modulus::new(q, n, shifts, i))
        .collect()
}

/// Role of a limb in the raised basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimbRole {
    Original,
    Extension,
}

/// An ordered set of limbs together with the recombination constants for the
/// whole set.
#[derive(Clone, Debug)]
pub struct RnsBasis {
    moduli: Vec<Modulus>,
    roles: Vec<LimbRole>,
    /// `Q̃_i = (Q/q_i)^{-1} mod q_i`.
    q_hat_inv: Vec<u64>,
}

impl RnsBasis {
    pub fn new(moduli: Vec<Modulus>, roles: Vec<LimbRole>) -> Result<Self> {
        if moduli.len() != roles.len() || moduli.is_empty() {
            return Err(Error::InvalidParams("basis needs one role per limb".into()));
        }
        for (i, a) in moduli.iter().enumerate() {
            if moduli[..i].iter().any(|b| b.value() == a.value()) {
                return Err(Error::InvalidParams(format!("duplicate limb {}", a.value())));
            }
        }
        let q_hat_inv = moduli
            .iter()
            .enumerate()
            .map(|(i, qi)| {
                let prod = moduli
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(1u64, |acc, (_, qj)| qi.mul(acc, qj.value() % qi.value()));
                qi.inv(prod)
            })
            .collect();
        Ok(Self {
            moduli,
            roles,
            q_hat_inv,
        })
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    pub fn roles(&self) -> &[LimbRole] {
        &self.roles
    }

    pub fn q_hat_inv(&self) -> &[u64] {
        &self.q_hat_inv
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn extension_count(&self) -> usize {
        self.roles.iter().filter(|r| **r == LimbRole::Extension).count()
    }

    /// Residues of a small signed integer.
    pub fn decompose(&self, x: i128) -> Vec<u64> {
        self.moduli.iter().map(|m| m.from_i128(x)).collect()
    }
}

/// Precomputed fast basis conversion from a source limb set to a disjoint
/// target limb set:
///
/// `[x]_p = Σ_i [x_i · Q̃_i]_{q_i} · (Q/q_i mod p)  (mod p)`
///
/// The inner products `y_i = [x_i·Q̃_i]_{q_i}` do not depend on `p`, so they are
/// computed once per coefficient and reused across every target limb.
#[derive(Clone, Debug)]
pub struct BasisConverter {
    src: Vec<Modulus>,
    dst: Vec<Modulus>,
    q_hat_inv: Vec<u64>,
    q_hat_inv_shoup: Vec<u64>,
    /// `[dst][src]`: `Q_i* mod p`.
    q_star_mod_p: Vec<Vec<u64>>,
    /// `[dst]`: `Q mod p`, used by the exact variant.
    q_mod_p: Vec<u64>,
}

impl BasisConverter {
    pub fn new(src: &[Modulus], dst: &[Modulus]) -> Result<Self> {
        if src.is_empty() {
            return Err(Error::InvalidParams("empty source basis".into()));
        }
        for p in dst {
            if let Some(q) = src.iter().find(|q| q.value() == p.value()) {
                return Err(Error::OverlappingBases(q.value()));
            }
        }
        let q_hat_inv: Vec<u64> = src
            .iter()
            .enumerate()
            .map(|(i, qi)| {
                let prod = src
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(1u64, |acc, (_, qj)| qi.mul(acc, qj.value() % qi.value()));
                qi.inv(prod)
            })
            .collect();
        let q_hat_inv_shoup = src.iter().zip(&q_hat_inv).map(|(m, &w)| m.shoup(w)).collect();
        let q_star_mod_p = dst
            .iter()
            .map(|p| {
                (0..src.len())
                    .map(|i| {
                        src.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != i)
                            .fold(1u64, |acc, (_, qj)| p.mul(acc, qj.value() % p.value()))
                    })
                    .collect()
            })
            .collect();
        let q_mod_p = dst
            .iter()
            .map(|p| src.iter().fold(1u64, |acc, q| p.mul(acc, q.value() % p.value())))
            .collect();
        Ok(Self {
            src: src.to_vec(),
            dst: dst.to_vec(),
            q_hat_inv,
            q_hat_inv_shoup,
            q_star_mod_p,
            q_mod_p,
        })
    }

    pub fn src(&self) -> &[Modulus] {
        &self.src
    }

    pub fn dst(&self) -> &[Modulus] {
        &self.dst
    }

    /// Modular multiplications performed by one scalar conversion with product reuse.
    pub fn mult_count(&self) -> u64 {
        let l = self.src.len() as u64;
        let k = self.dst.len() as u64;
        l * (k + 1)
    }

    /// Modular multiplications the naive per-target recomputation would need.
    pub fn naive_mult_count(&self) -> u64 {
        2 * self.src.len() as u64 * self.dst.len() as u64
    }

    /// Converts one residue vector, returning the target residues.
    pub fn convert(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.src.len(), "one residue per source limb");
        let y: Vec<u64> = x
            .iter()
            .zip(&self.src)
            .zip(&self.q_hat_inv)
            .map(|((&xi, qi), &t)| qi.mul(xi, t))
            .collect();
        self.q_star_mod_p
            .iter()
            .zip(&self.dst)
            .map(|(row, p)| {
                row.iter()
                    .zip(&y)
                    .fold(0u64, |acc, (&c, &yi)| p.add(acc, p.mul(yi % p.value(), c)))
            })
            .collect()
    }

    /// Naive variant that recomputes `x_i·Q̃_i` for every target limb.
    pub fn convert_naive(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.src.len());
        self.q_star_mod_p
            .iter()
            .zip(&self.dst)
            .map(|(row, p)| {
                x.iter()
                    .zip(&self.src)
                    .zip(&self.q_hat_inv)
                    .zip(row)
                    .fold(0u64, |acc, (((&xi, qi), &t), &c)| {
                        let yi = qi.mul(xi, t);
                        p.add(acc, p.mul(yi % p.value(), c))
                    })
            })
            .collect()
    }

    /// Exact conversion: removes the `e·Q` overshoot of the fast formula by
    /// estimating `e = round(Σ y_i/q_i)` in floating point. Exact whenever the
    /// value lies in `[0, Q)` and the fractional estimate is not within ~2^-40
    /// of a half-integer.
    pub fn convert_exact(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.src.len());
        let y: Vec<u64> = x
            .iter()
            .zip(&self.src)
            .zip(&self.q_hat_inv)
            .map(|((&xi, qi), &t)| qi.mul(xi, t))
            .collect();
        let e: f64 = y
            .iter()
            .zip(&self.src)
            .map(|(&yi, qi)| yi as f64 / qi.value() as f64)
            .sum::<f64>()
            .floor();
        let e = e as u64;
        self.q_star_mod_p
            .iter()
            .zip(&self.dst)
            .zip(&self.q_mod_p)
            .map(|((row, p), &qm)| {
                let s = row
                    .iter()
                    .zip(&y)
                    .fold(0u64, |acc, (&c, &yi)| p.add(acc, p.mul(yi % p.value(), c)));
                p.sub(s, p.mul(e % p.value(), qm))
            })
            .collect()
    }

    /// Limb-wise conversion of whole polynomials: `src_limbs[i]` holds the
    /// coefficients modulo `src[i]`, and one output row is produced per target.
    ///
    /// When `centered` is set, the result is the conversion of the centered
    /// representative, i.e. of `x - Q` whenever the fast estimate says `x > Q/2`.
    pub fn convert_poly(&self, src_limbs: &[&[u64]], centered: bool) -> Vec<Vec<u64>> {
        assert_eq!(src_limbs.len(), self.src.len());
        let n = src_limbs[0].len();
        let l = self.src.len();
        // y_i for every coefficient, computed once.
        let mut y = vec![0u64; l * n];
        for (i, (limb, qi)) in src_limbs.iter().zip(&self.src).enumerate() {
            let (t, ts) = (self.q_hat_inv[i], self.q_hat_inv_shoup[i]);
            for (dst, &x) in y[i * n..(i + 1) * n].iter_mut().zip(limb.iter()) {
                *dst = qi.mul_shoup(x, t, ts);
            }
        }
        let overshoot: Option<Vec<u64>> = centered.then(|| {
            let inv: Vec<f64> = self.src.iter().map(|q| 1.0 / q.value() as f64).collect();
            (0..n)
                .map(|c| {
                    let v: f64 = (0..l).map(|i| y[i * n + c] as f64 * inv[i]).sum();
                    // Number of Q multiples such that the result lands in (-Q/2, Q/2].
                    (v + 0.5).floor() as u64
                })
                .collect()
        });
        self.q_star_mod_p
            .iter()
            .zip(&self.dst)
            .zip(&self.q_mod_p)
            .map(|((row, p), &qm)| {
                let mut acc = vec![0u128; n];
                for (i, &c) in row.iter().enumerate() {
                    let yi = &y[i * n..(i + 1) * n];
                    for (a, &v) in acc.iter_mut().zip(yi) {
                        *a += v as u128 * c as u128;
                    }
                }
                let mut out: Vec<u64> = acc.into_iter().map(|a| p.reduce_u128(a)).collect();
                if let Some(e) = &overshoot {
                    for (o, &k) in out.iter_mut().zip(e) {
                        *o = p.sub(*o, p.mul(k % p.value(), qm));
                    }
                }
                out
            })
            .collect()
    }
}

impl BasisConverter {
    /// Reference form of [`BasisConverter::convert_poly`]: recomputes
    /// `x_i·Q̃_i` for every target limb. Produces identical residues.
    pub fn convert_poly_naive(&self, src_limbs: &[&[u64]], centered: bool) -> Vec<Vec<u64>> {
        assert_eq!(src_limbs.len(), self.src.len());
        let n = src_limbs[0].len();
        let inv: Vec<f64> = self.src.iter().map(|q| 1.0 / q.value() as f64).collect();
        self.q_star_mod_p
            .iter()
            .zip(&self.dst)
            .zip(&self.q_mod_p)
            .map(|((row, p), &qm)| {
                (0..n)
                    .map(|c| {
                        let mut acc = 0u64;
                        let mut est = 0.0;
                        for (i, qi) in self.src.iter().enumerate() {
                            let y = qi.mul(src_limbs[i][c], self.q_hat_inv[i]);
                            est += y as f64 * inv[i];
                            acc = p.add(acc, p.mul(y % p.value(), row[i]));
                        }
                        if centered {
                            let k = (est + 0.5).floor() as u64;
                            acc = p.sub(acc, p.mul(k % p.value(), qm));
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn madd_small_prime() {
        assert_eq!(precompute_madd(13, 4, 2), vec![3, 6, 9]);
    }

    #[test]
    fn madd_first_entry_is_power_of_two() {
        for m in generate_modulus_chain(1 << 10, 4, 40, 6).unwrap() {
            let expect = ((1u128 << m.bits()) % m.value() as u128) as u64;
            assert_eq!(m.madd()[0], expect);
            assert_eq!(m.madd().len(), 63);
        }
    }

    #[test]
    fn chain_small_example() {
        let chain = generate_modulus_chain(16, 1, 8, 6).unwrap();
        assert_eq!(chain[0].value(), 193);
        assert!(generate_modulus_chain(16, 3, 8, 6).is_err());
    }

    #[test]
    fn chain_is_ntt_friendly() {
        let n = 1 << 12;
        let chain = generate_modulus_chain(n, 8, 30, 6).unwrap();
        for (i, m) in chain.iter().enumerate() {
            assert_eq!(m.value() % (2 * n as u64), 1);
            assert_eq!(m.bits(), 30);
            assert_eq!(m.pow(m.ntt_root(), n as u64), m.value() - 1);
            assert_eq!(m.pow(m.ntt_root(), 2 * n as u64), 1);
            assert_eq!(m.index(), i);
        }
        for w in chain.windows(2) {
            assert!(w[0].value() > w[1].value());
        }
    }

    #[test]
    fn reduce_edges() {
        let m = &generate_modulus_chain(1 << 4, 1, 54, 6).unwrap()[0];
        assert_eq!(m.reduce(0), 0);
        assert_eq!(m.reduce(m.value() as u128), 0);
        let max = (m.value() - 1) as u128;
        assert_eq!(m.reduce(max * max), (max * max % m.value() as u128) as u64);
        assert!(m.try_reduce(1u128 << 108).is_err());
        assert_eq!(m.reduce_iterations(), 9);
    }

    #[test]
    fn add_sub_wrap() {
        let m = Modulus::new(97, 16, 6, 0).unwrap();
        assert_eq!(m.add(96, 1), 0);
        assert_eq!(m.sub(0, 1), 96);
        assert_eq!(m.mul(1, 55), 55);
        for a in 1..97 {
            assert_eq!(m.mul(a, m.pow(a, 95)), 1);
        }
    }

    #[test]
    fn modulus_rejects_bad_input() {
        assert!(Modulus::new(91, 16, 6, 0).is_err());
        assert!(Modulus::new(97, 64, 6, 0).is_err());
        assert!(Modulus::new(97, 16, 0, 0).is_err());
    }

    #[test]
    fn small_basis_conversion() {
        let q13 = Modulus::new(13, 2, 2, 0).unwrap();
        let q17 = Modulus::new(17, 2, 2, 1).unwrap();
        let p11 = Modulus::new(11, 1, 2, 2).unwrap();
        let conv = BasisConverter::new(&[q13.clone(), q17.clone()], &[p11]).unwrap();
        assert_eq!(conv.convert_exact(&[9, 15]), vec![1]);
        assert_eq!(conv.convert(&[0, 0]), vec![0]);
        assert_eq!(conv.mult_count(), 4);
        assert_eq!(conv.naive_mult_count(), 4);
        assert!(BasisConverter::new(&[q13.clone(), q17], &[q13]).is_err());
    }

    #[test]
    fn fast_conversion_error_is_bounded_multiple_of_q() {
        let q13 = Modulus::new(13, 2, 2, 0).unwrap();
        let q17 = Modulus::new(17, 2, 2, 1).unwrap();
        let p11 = Modulus::new(11, 1, 2, 2).unwrap();
        let conv = BasisConverter::new(&[q13, q17], &[p11]).unwrap();
        let big_q = 13 * 17;
        for x in 0..big_q {
            let got = conv.convert(&[x % 13, x % 17])[0];
            let ok = (0..=2).any(|e| (x + e * big_q) % 11 == got);
            assert!(ok, "x = {x}");
        }
    }
}
