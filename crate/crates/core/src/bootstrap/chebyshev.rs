//! Chebyshev interpolation on `[-1, 1]` and depth-optimal homomorphic evaluation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::ckks::{Ciphertext, Evaluator};
use crate::error::{Error, Result};

/// `p(x) = Σ c_k T_k(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chebyshev {
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at the `degree + 1` Chebyshev nodes of the first kind.
    pub fn interpolate(f: impl Fn(f64) -> f64, degree: usize) -> Self {
        let m = degree + 1;
        let nodes: Vec<f64> = (0..m)
            .map(|i| f((PI * (i as f64 + 0.5) / m as f64).cos()))
            .collect();
        let coeffs = (0..m)
            .map(|k| {
                let s: f64 = nodes
                    .iter()
                    .enumerate()
                    .map(|(i, y)| y * (PI * k as f64 * (i as f64 + 0.5) / m as f64).cos())
                    .sum();
                let c = 2.0 * s / m as f64;
                if k == 0 {
                    c / 2.0
                } else {
                    c
                }
            })
            .collect();
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Multiplicative depth of [`evaluate`].
    pub fn depth(&self) -> usize {
        bit_len(self.degree()).max(1)
    }

    /// Clenshaw recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }
}

/// Bits needed for `d`, i.e. `ceil(log2(d + 1))`.
fn bit_len(d: usize) -> usize {
    (usize::BITS - d.leading_zeros()) as usize
}

/// Evaluates `p` on the slots of `x` using exactly `p.depth()` levels; the
/// result has scale `target_scale`.
///
/// The power basis `T_k` is built with `T_{a+b} = 2 T_a T_b − T_{a−b}`, each
/// at depth `ceil(log2 k)`. The polynomial is split recursively at
/// `T_{2^i}`; on the critical path the split continues down to degree 1 so
/// that leaf constant products never add a level.
pub fn evaluate(ev: &Evaluator, x: &Ciphertext, p: &Chebyshev, target_scale: f64) -> Result<Ciphertext> {
    let depth = p.depth();
    if x.limbs() <= depth {
        return Err(Error::NeedsBootstrapping {
            op: "polynomial evaluation",
            limbs: x.limbs(),
        });
    }
    let baby = depth.div_ceil(2).max(1);
    let mut st = State {
        ev,
        top: x.limbs(),
        baby,
        powers: BTreeMap::from([(1, x.clone())]),
    };
    st.eval(&p.coeffs, depth, target_scale)
}

struct State<'e, 'a> {
    ev: &'e Evaluator<'a>,
    top: usize,
    baby: usize,
    powers: BTreeMap<usize, Ciphertext>,
}

impl State<'_, '_> {
    fn power(&mut self, k: usize) -> Result<Ciphertext> {
        if let Some(c) = self.powers.get(&k) {
            return Ok(c.clone());
        }
        let ev = self.ev;
        let out = if k.is_power_of_two() {
            let t = self.power(k / 2)?;
            let sq = ev.mul_int(&ev.square(&t)?, 2);
            ev.add_const(&sq, Complex64::new(-1.0, 0.0))?
        } else {
            let a = k.next_power_of_two() / 2;
            let b = k - a;
            let ta = self.power(a)?;
            let tb = self.power(b)?;
            let prod = ev.mul_int(&ev.mul(&ta, &tb)?, 2);
            let mut tc = self.power(a - b)?;
            tc.drop_to(prod.limbs() + 1);
            let tc = ev.mul_const(&tc, Complex64::new(1.0, 0.0), prod.scale)?;
            ev.sub(&prod, &tc)?
        };
        self.powers.insert(k, out.clone());
        Ok(out)
    }

    fn eval(&mut self, coeffs: &[f64], budget: usize, scale: f64) -> Result<Ciphertext> {
        let deg = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        let bits = bit_len(deg);
        let slack = budget > bits;
        if deg <= 1 || (slack && deg < (1 << self.baby)) {
            return self.leaf(&coeffs[..=deg.max(1).min(coeffs.len() - 1)], budget, scale);
        }
        let half = 1usize << (bits - 1);
        let mut q = vec![0.0; deg - half + 1];
        let mut r = coeffs[..half].to_vec();
        q[0] = coeffs[half];
        for i in 1..=deg - half {
            q[i] = 2.0 * coeffs[half + i];
            r[half - i] -= coeffs[half + i];
        }
        let out_limbs = self.top - budget;
        let mut t = self.power(half)?;
        t.drop_to(out_limbs + 1);
        let q_scale = scale * self.ev.ctx().q(out_limbs) as f64 / t.scale;
        let qct = self.eval(&q, budget - 1, q_scale)?;
        let mut prod = self.ev.mul(&qct, &t)?;
        prod.scale = scale;
        let rct = self.eval(&r, budget, scale)?;
        self.ev.add(&prod, &rct)
    }

    fn leaf(&mut self, coeffs: &[f64], budget: usize, scale: f64) -> Result<Ciphertext> {
        let out_limbs = self.top - budget;
        let raw_scale = scale * self.ev.ctx().q(out_limbs) as f64;
        let mut acc: Option<Ciphertext> = None;
        for k in 1..coeffs.len().max(2) {
            let c = coeffs.get(k).copied().unwrap_or(0.0);
            if c == 0.0 && (acc.is_some() || k + 1 < coeffs.len()) {
                continue;
            }
            let mut t = self.power(k)?;
            t.drop_to(out_limbs + 1);
            let mut term = self
                .ev
                .mul_const_no_rescale(&t, Complex64::new(c, 0.0), raw_scale / t.scale)?;
            term.scale = raw_scale;
            acc = Some(match acc {
                None => term,
                Some(a) => self.ev.add(&a, &term)?,
            });
        }
        let mut out = acc.expect("leaf has a linear term");
        self.ev.rescale_assign(&mut out)?;
        out.scale = scale;
        match coeffs.first() {
            Some(&c0) if c0 != 0.0 => self.ev.add_const(&out, Complex64::new(c0, 0.0)),
            _ => Ok(out),
        }
    }
}
