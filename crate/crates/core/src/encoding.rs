//! Canonical-embedding encoder for `n ≤ N/2` complex slots.
//!
//! With `gap = N/(2n)` the plaintext lives in the subring generated by
//! `Y = X^gap`, where `Y^{2n} = -1`. Slot `k` is the evaluation at
//! `ζ_k = exp(2πi·5^k/(4n))`. Writing `w_j = m_j + i·m_{j+n}` for `j < n`, the
//! slot vector is `v = U·w` with `U[k][j] = ζ_k^j` since `ζ_k^n = i`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Special FFT over `n` slots.
#[derive(Clone, Debug)]
pub struct SlotFft {
    n: usize,
    /// `exp(2πi·t/(4n))` for `t < 4n`.
    roots: Vec<Complex64>,
    /// `5^k mod 4n`.
    rot_group: Vec<usize>,
}

impl SlotFft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "slot count must be a power of two");
        let m = 4 * n;
        let roots = (0..m)
            .map(|t| Complex64::from_polar(1.0, 2.0 * PI * t as f64 / m as f64))
            .collect();
        let mut rot_group = Vec::with_capacity(n);
        let mut g = 1usize;
        for _ in 0..n {
            rot_group.push(g);
            g = g * 5 % m;
        }
        Self { n, roots, rot_group }
    }

    pub fn slots(&self) -> usize {
        self.n
    }

    pub fn rot_group(&self) -> &[usize] {
        &self.rot_group
    }

    /// `ζ_k^j` exactly from the root table.
    pub fn entry(&self, k: usize, j: usize) -> Complex64 {
        let m = 4 * self.n;
        self.roots[(self.rot_group[k] * j) % m]
    }

    /// In place `v ← U·v`.
    pub fn forward(&self, v: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(v.len(), n);
        bit_reverse(v);
        let m = 4 * n;
        let mut len = 2;
        while len <= n {
            let lenh = len / 2;
            let lenq = 4 * len;
            for i in (0..n).step_by(len) {
                for j in 0..lenh {
                    let idx = (self.rot_group[j] % lenq) * (m / lenq);
                    let u = v[i + j];
                    let t = v[i + j + lenh] * self.roots[idx];
                    v[i + j] = u + t;
                    v[i + j + lenh] = u - t;
                }
            }
            len *= 2;
        }
    }

    /// In place `v ← U^{-1}·v`.
    pub fn inverse(&self, v: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(v.len(), n);
        let m = 4 * n;
        let mut len = n;
        while len >= 2 {
            let lenh = len / 2;
            let lenq = 4 * len;
            for i in (0..n).step_by(len) {
                for j in 0..lenh {
                    let idx = (lenq - self.rot_group[j] % lenq) * (m / lenq);
                    let u = v[i + j] + v[i + j + lenh];
                    let t = (v[i + j] - v[i + j + lenh]) * self.roots[idx % m];
                    v[i + j] = u;
                    v[i + j + lenh] = t;
                }
            }
            len /= 2;
        }
        bit_reverse(v);
        let scale = 1.0 / n as f64;
        for x in v.iter_mut() {
            *x *= scale;
        }
    }
}

pub fn bit_reverse<T>(v: &mut [T]) {
    let n = v.len();
    if n < 2 {
        return;
    }
    let shift = usize::BITS - n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if i < j {
            v.swap(i, j);
        }
    }
}

/// Encodes and decodes slot vectors to and from integer coefficient vectors.
#[derive(Clone, Debug)]
pub struct Encoder {
    ring_degree: usize,
}

impl Encoder {
    pub fn new(ring_degree: usize) -> Self {
        Self { ring_degree }
    }

    pub fn ring_degree(&self) -> usize {
        self.ring_degree
    }

    fn gap(&self, n: usize) -> Result<usize> {
        if !n.is_power_of_two() || 2 * n > self.ring_degree {
            return Err(Error::InvalidParams(format!(
                "{n} slots do not fit ring degree {}",
                self.ring_degree
            )));
        }
        Ok(self.ring_degree / (2 * n))
    }

    /// Real coefficients (before scaling) of the polynomial whose slots are `v`.
    pub fn slots_to_coeffs(&self, v: &[Complex64]) -> Result<Vec<f64>> {
        let n = v.len();
        let gap = self.gap(n)?;
        let mut w = v.to_vec();
        SlotFft::new(n).inverse(&mut w);
        let mut out = vec![0.0; self.ring_degree];
        for (j, c) in w.iter().enumerate() {
            out[j * gap] = c.re;
            out[(j + n) * gap] = c.im;
        }
        Ok(out)
    }

    /// Inverse of [`Encoder::slots_to_coeffs`]; only coefficients at multiples of the gap are read.
    pub fn coeffs_to_slots(&self, coeffs: &[f64], n: usize) -> Result<Vec<Complex64>> {
        let gap = self.gap(n)?;
        let mut w: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(coeffs[j * gap], coeffs[(j + n) * gap]))
            .collect();
        SlotFft::new(n).forward(&mut w);
        Ok(w)
    }

    /// Scales by `delta` and rounds to integers.
    pub fn encode(&self, v: &[Complex64], delta: f64) -> Result<Vec<i128>> {
        let coeffs = self.slots_to_coeffs(v)?;
        coeffs
            .iter()
            .map(|&c| {
                let x = (c * delta).round();
                if !x.is_finite() || x.abs() >= 2f64.powi(126) {
                    Err(Error::EncodingOverflow(format!("coefficient {x:e}")))
                } else {
                    Ok(x as i128)
                }
            })
            .collect()
    }

    /// Divides centered integer coefficients by `delta` and evaluates the slots.
    pub fn decode(&self, coeffs: &[f64], n: usize, delta: f64) -> Result<Vec<Complex64>> {
        let scaled: Vec<f64> = coeffs.iter().map(|&c| c / delta).collect();
        self.coeffs_to_slots(&scaled, n)
    }
}
