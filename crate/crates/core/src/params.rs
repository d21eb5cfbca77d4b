use serde::{Deserialize, Serialize};

use crate::encoding::Encoder;
use crate::error::{Error, Result};
use crate::keyswitch::KeySwitchTables;
use crate::poly::{Poly, Representation, Ring};
use crate::rns::{generate_modulus_chain, Modulus, DEFAULT_SHIFTS};

/// Scheme parameters. The ciphertext modulus has `levels + 1` limbs and the
/// key-switching modulus `P` has `alpha()` limbs, all of `limb_bits` bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub log_n: u32,
    pub limb_bits: u32,
    pub levels: usize,
    pub dnum: usize,
    pub fft_iter: usize,
    /// Default encoding scale.
    pub scale: f64,
    /// Target security in bits; 0 disables the modulus budget check.
    pub lambda: u32,
    pub shifts: u32,
    pub sigma: f64,
    /// Hamming weight of the secret; `None` samples a dense ternary secret.
    pub secret_weight: Option<usize>,
}

impl SchemeParams {
    /// The FPGA deployment: N = 2^16, 54-bit limbs, L = 23, dnum = 3, fftIter = 4.
    pub fn fpga() -> Self {
        Self {
            log_n: 16,
            limb_bits: 54,
            levels: 23,
            dnum: 3,
            fft_iter: 4,
            scale: 2f64.powi(44),
            lambda: 128,
            shifts: DEFAULT_SHIFTS,
            sigma: 3.2,
            secret_weight: None,
        }
    }

    /// Laptop-sized bootstrappable set: N = 2^14 with 30-bit limbs and the same
    /// level structure as [`SchemeParams::fpga`]. Not secure.
    pub fn desk() -> Self {
        Self {
            log_n: 14,
            limb_bits: 30,
            levels: 23,
            scale: 2f64.powi(30),
            lambda: 0,
            ..Self::fpga()
        }
    }

    pub fn n(&self) -> usize {
        1 << self.log_n
    }

    pub fn q_limbs(&self) -> usize {
        self.levels + 1
    }

    /// Limbs per digit, `⌈(L+1)/dnum⌉`; also the number of extension limbs.
    pub fn alpha(&self) -> usize {
        self.q_limbs().div_ceil(self.dnum)
    }

    pub fn raised_limbs(&self) -> usize {
        self.q_limbs() + self.alpha()
    }

    /// Multiplicative depth of bootstrapping: two linear transforms plus a depth-9 polynomial.
    pub fn boot_depth(&self) -> usize {
        boot_depth(self.fft_iter)
    }

    /// Limbs left after bootstrapping a fully raised ciphertext.
    pub fn limbs_after_bootstrap(&self) -> Option<usize> {
        self.q_limbs().checked_sub(self.boot_depth())
    }

    /// Multiplications available after bootstrapping (one limb must remain).
    pub fn levels_after_bootstrap(&self) -> Option<usize> {
        self.limbs_after_bootstrap().and_then(|l| l.checked_sub(1))
    }

    pub fn log_pq(&self) -> u32 {
        self.raised_limbs() as u32 * self.limb_bits
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(2..=17).contains(&self.log_n) {
            return bad(format!("log N = {} outside 2..=17", self.log_n));
        }
        if !(4..=54).contains(&self.limb_bits) {
            return bad(format!("limb width {} outside 4..=54", self.limb_bits));
        }
        if self.dnum == 0 || self.dnum > self.q_limbs() {
            return bad(format!("dnum = {} with {} limbs", self.dnum, self.q_limbs()));
        }
        if self.fft_iter == 0 {
            return bad("fftIter must be positive".into());
        }
        if !(self.scale > 1.0 && self.scale.is_finite()) {
            return bad(format!("scale {}", self.scale));
        }
        if !(1..=8).contains(&self.shifts) {
            return bad(format!("shifts = {}", self.shifts));
        }
        if let Some(h) = self.secret_weight {
            if h == 0 || h > self.n() {
                return bad(format!("secret weight {h}"));
            }
        }
        if self.lambda > 0 {
            match security_budget(self.log_n, self.lambda) {
                Some(b) if self.log_pq() <= b => {}
                Some(b) => {
                    return bad(format!(
                        "log PQ = {} exceeds the {}-bit budget {b} at N = 2^{}",
                        self.log_pq(),
                        self.lambda,
                        self.log_n
                    ))
                }
                None => return bad(format!("no budget known for λ = {}", self.lambda)),
            }
        }
        Ok(())
    }
}

pub fn boot_depth(fft_iter: usize) -> usize {
    2 * fft_iter + 9
}

/// Largest `log PQ` for 128-bit security with a ternary secret. The N = 2^16
/// entry is the deployment's own budget.
pub fn security_budget(log_n: u32, lambda: u32) -> Option<u32> {
    if lambda != 128 {
        return None;
    }
    Some(match log_n {
        10 => 27,
        11 => 54,
        12 => 109,
        13 => 218,
        14 => 438,
        15 => 881,
        16 => 1728,
        _ => return None,
    })
}

/// Everything precomputed for one parameter set.
#[derive(Debug)]
pub struct Context {
    params: SchemeParams,
    ring: Ring,
    encoder: Encoder,
    /// `[l][i] = q_l^{-1} mod q_i` for `i < l`.
    rescale_inv: Vec<Vec<u64>>,
    /// `q_j^{-1} mod q_i` for the first few limbs, used to decode.
    garner_inv: Vec<Vec<u64>>,
    ks: KeySwitchTables,
}

/// Limbs used to lift decrypted coefficients to integers.
pub const DECODE_LIMBS: usize = 3;

impl Context {
    pub fn new(params: SchemeParams) -> Result<Self> {
        params.validate()?;
        let n = params.n();
        let alpha = params.alpha();
        let ql = params.q_limbs();
        // The extension limbs take the largest primes so that P exceeds every digit product.
        let chain = generate_modulus_chain(n, ql + alpha, params.limb_bits, params.shifts)?;
        let (p_part, q_part) = chain.split_at(alpha);
        let moduli: Vec<Modulus> = q_part
            .iter()
            .chain(p_part)
            .enumerate()
            .map(|(i, m)| Modulus::new(m.value(), n, params.shifts, i))
            .collect::<Result<_>>()?;
        let ring = Ring::new(n, moduli)?;
        let rescale_inv = (0..ql)
            .map(|l| {
                (0..l)
                    .map(|i| {
                        let qi = ring.modulus(i);
                        qi.inv(ring.modulus(l).value() % qi.value())
                    })
                    .collect()
            })
            .collect();
        let garner_inv = (0..DECODE_LIMBS.min(ql))
            .map(|i| {
                (0..i)
                    .map(|j| {
                        let qi = ring.modulus(i);
                        qi.inv(ring.modulus(j).value() % qi.value())
                    })
                    .collect()
            })
            .collect();
        let ks = KeySwitchTables::new(&ring, ql, alpha)?;
        Ok(Self {
            encoder: Encoder::new(n),
            params,
            ring,
            rescale_inv,
            garner_inv,
            ks,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn n(&self) -> usize {
        self.ring.n()
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn ks_tables(&self) -> &KeySwitchTables {
        &self.ks
    }

    pub fn q_limbs(&self) -> usize {
        self.params.q_limbs()
    }

    pub fn alpha(&self) -> usize {
        self.params.alpha()
    }

    /// Modulus value of ciphertext limb `i`.
    pub fn q(&self, i: usize) -> u64 {
        self.ring.modulus(i).value()
    }

    pub fn q_basis(&self, limbs: usize) -> Vec<usize> {
        (0..limbs).collect()
    }

    pub fn p_basis(&self) -> Vec<usize> {
        let ql = self.q_limbs();
        (ql..ql + self.alpha()).collect()
    }

    /// First `limbs` ciphertext limbs followed by the extension limbs.
    pub fn raised_basis(&self, limbs: usize) -> Vec<usize> {
        let mut b = self.q_basis(limbs);
        b.extend(self.p_basis());
        b
    }

    pub fn rescale_inv(&self, dropped: usize) -> &[u64] {
        &self.rescale_inv[dropped]
    }

    /// Centered integer value of every coefficient (as `f64`), recovered
    /// exactly from up to [`DECODE_LIMBS`] limbs by mixed-radix conversion.
    pub fn lift_centered(&self, p: &Poly) -> Vec<f64> {
        let p = if p.rep == Representation::Evaluation {
            let mut c = p.clone();
            c.truncate(DECODE_LIMBS.min(c.limb_count()));
            self.ring.to_coeff(c)
        } else {
            p.clone()
        };
        let k = DECODE_LIMBS.min(p.limb_count());
        debug_assert!(p.basis[..k].iter().enumerate().all(|(i, &b)| i == b));
        let qs: Vec<u64> = (0..k).map(|i| self.q(i)).collect();
        (0..self.n())
            .map(|c| {
                let mut digits = [0u64; DECODE_LIMBS];
                for i in 0..k {
                    let m = self.ring.modulus(i);
                    let mut t = p.limbs[i][c];
                    for (j, &d) in digits[..i].iter().enumerate() {
                        t = m.mul(m.sub(t, d % m.value()), self.garner_inv[i][j]);
                    }
                    digits[i] = t;
                }
                // The value is negative when the top digit is in the upper half.
                let negative = digits[k - 1] > qs[k - 1] / 2;
                let mut v = if negative {
                    digits[k - 1] as f64 - qs[k - 1] as f64
                } else {
                    digits[k - 1] as f64
                };
                for i in (0..k - 1).rev() {
                    v = v * qs[i] as f64 + digits[i] as f64;
                }
                v
            })
            .collect()
    }
}
