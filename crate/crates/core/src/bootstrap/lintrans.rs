//! Slot-domain linear maps stored by rotated diagonals, and the factorization
//! of the special FFT into radix-2 stages.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::ckks::{encode, Ciphertext, Evaluator};
use crate::encoding::SlotFft;
use crate::error::Result;

const ZERO_TOL: f64 = 1e-13;

/// `out[k] = Σ_d diags[d][k] · in[(k + d) mod m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagMatrix {
    m: usize,
    diags: BTreeMap<usize, Vec<Complex64>>,
}

impl DiagMatrix {
    pub fn identity(m: usize) -> Self {
        let mut diags = BTreeMap::new();
        diags.insert(0, vec![Complex64::new(1.0, 0.0); m]);
        Self { m, diags }
    }

    pub fn from_diags(m: usize, diags: BTreeMap<usize, Vec<Complex64>>) -> Self {
        let mut out = Self { m, diags };
        out.prune();
        out
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn diags(&self) -> &BTreeMap<usize, Vec<Complex64>> {
        &self.diags
    }

    /// Nonzero diagonal offsets.
    pub fn offsets(&self) -> Vec<usize> {
        self.diags.keys().copied().collect()
    }

    fn prune(&mut self) {
        self.diags
            .retain(|_, v| v.iter().any(|z| z.norm() > ZERO_TOL));
    }

    /// Cleartext application.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        assert_eq!(v.len(), m);
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for (&d, diag) in &self.diags {
            for k in 0..m {
                out[k] += diag[k] * v[(k + d) % m];
            }
        }
        out
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &DiagMatrix) -> DiagMatrix {
        let m = self.m;
        assert_eq!(m, rhs.m);
        let mut diags: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for (&a, da) in &self.diags {
            for (&b, db) in &rhs.diags {
                let entry = diags
                    .entry((a + b) % m)
                    .or_insert_with(|| vec![Complex64::new(0.0, 0.0); m]);
                for k in 0..m {
                    entry[k] += da[k] * db[(k + a) % m];
                }
            }
        }
        DiagMatrix::from_diags(m, diags)
    }

    /// Same map acting on a vector repeated twice, as seen by a view with twice the slots.
    pub fn duplicate(&self) -> DiagMatrix {
        let diags = self
            .diags
            .iter()
            .map(|(&d, v)| (d, v.iter().chain(v.iter()).copied().collect()))
            .collect();
        DiagMatrix {
            m: 2 * self.m,
            diags,
        }
    }

    /// Left-multiplies by `diag(row)`.
    pub fn scale_rows(&self, row: &[Complex64]) -> DiagMatrix {
        let diags = self
            .diags
            .iter()
            .map(|(&d, v)| (d, v.iter().zip(row).map(|(a, b)| a * b).collect()))
            .collect();
        DiagMatrix::from_diags(self.m, diags)
    }

    pub fn scale(&self, c: Complex64) -> DiagMatrix {
        self.scale_rows(&vec![c; self.m])
    }

    /// Dense form, `dense[k][j]`.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let m = self.m;
        let mut out = vec![vec![Complex64::new(0.0, 0.0); m]; m];
        for (&d, diag) in &self.diags {
            for k in 0..m {
                out[k][(k + d) % m] += diag[k];
            }
        }
        out
    }

    /// Homomorphic application: one rotation and plaintext product per
    /// diagonal, then a single rescale. Plaintexts are encoded at `pt_scale`.
    pub fn apply_encrypted(&self, ev: &Evaluator, ct: &Ciphertext, pt_scale: f64) -> Result<Ciphertext> {
        let mut out = self.apply_unrescaled(ev, ct, pt_scale)?;
        ev.rescale_assign(&mut out)?;
        Ok(out)
    }

    /// Sum of `rot_d(shift_d(diag_d) ⊙ ct)` before rescaling. Multiplying
    /// first lets the key-switching noise land on the larger product scale.
    pub fn apply_unrescaled(&self, ev: &Evaluator, ct: &Ciphertext, pt_scale: f64) -> Result<Ciphertext> {
        let ctx = ev.ctx();
        let m = self.m;
        let mut acc: Option<Ciphertext> = None;
        for (&d, diag) in &self.diags {
            let shifted: Vec<Complex64> = (0..m).map(|k| diag[(k + m - d) % m]).collect();
            let pt = encode(ctx, &shifted, pt_scale, ct.limbs())?;
            let mut term = ev.mul_plain_no_rescale(ct, &pt)?;
            if d != 0 {
                term = ev.rotate(&term, -(d as isize))?;
            }
            acc = Some(match acc {
                None => term,
                Some(a) => ev.add(&a, &term)?,
            });
        }
        let mut out = acc.expect("at least one diagonal");
        out.slots = m;
        Ok(out)
    }
}

/// Forward radix-2 stage with block length `len` of the `n`-slot special FFT.
pub fn fft_stage(fft: &SlotFft, len: usize) -> DiagMatrix {
    let n = fft.slots();
    let lenh = len / 2;
    let lenq = 4 * len;
    let mut d0 = vec![Complex64::new(0.0, 0.0); n];
    let mut dp = vec![Complex64::new(0.0, 0.0); n];
    let mut dm = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).step_by(len) {
        for j in 0..lenh {
            let psi = stage_root(fft, j, lenq);
            d0[i + j] = Complex64::new(1.0, 0.0);
            dp[i + j] = psi;
            dm[i + j + lenh] = Complex64::new(1.0, 0.0);
            d0[i + j + lenh] = -psi;
        }
    }
    diag3(n, lenh, d0, dp, dm)
}

/// Inverse of [`fft_stage`].
pub fn fft_stage_inverse(fft: &SlotFft, len: usize) -> DiagMatrix {
    let n = fft.slots();
    let lenh = len / 2;
    let lenq = 4 * len;
    let half = Complex64::new(0.5, 0.0);
    let mut d0 = vec![Complex64::new(0.0, 0.0); n];
    let mut dp = vec![Complex64::new(0.0, 0.0); n];
    let mut dm = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).step_by(len) {
        for j in 0..lenh {
            let inv = stage_root(fft, j, lenq).conj() * 0.5;
            d0[i + j] = half;
            dp[i + j] = half;
            dm[i + j + lenh] = inv;
            d0[i + j + lenh] = -inv;
        }
    }
    diag3(n, lenh, d0, dp, dm)
}

fn stage_root(fft: &SlotFft, j: usize, lenq: usize) -> Complex64 {
    let m = 4 * fft.slots();
    let t = (fft.rot_group()[j] % lenq) * (m / lenq);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / m as f64)
}

fn diag3(n: usize, lenh: usize, d0: Vec<Complex64>, dp: Vec<Complex64>, dm: Vec<Complex64>) -> DiagMatrix {
    let mut diags: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    let mut put = |off: usize, v: Vec<Complex64>| {
        let e = diags.entry(off % n).or_insert_with(|| vec![Complex64::new(0.0, 0.0); n]);
        for (a, b) in e.iter_mut().zip(v) {
            *a += b;
        }
    };
    put(0, d0);
    put(lenh, dp);
    put(n - lenh, dm);
    DiagMatrix::from_diags(n, diags)
}

/// Splits `stages` into `groups` contiguous runs (earlier runs are longer)
/// and multiplies each run; stages are listed in application order. Missing
/// runs are identities so that exactly `groups` levels are consumed.
pub fn group_stages(stages: &[DiagMatrix], groups: usize, m: usize) -> Vec<DiagMatrix> {
    let total = stages.len();
    let base = total / groups.max(1);
    let extra = total % groups.max(1);
    let mut out = Vec::with_capacity(groups);
    let mut it = stages.iter();
    for g in 0..groups {
        let size = base + usize::from(g < extra);
        let mut acc = DiagMatrix::identity(m);
        for s in it.by_ref().take(size) {
            acc = s.mul(&acc);
        }
        out.push(acc);
    }
    out
}

/// Stages of `v ↦ U^{-1} v` up to the final bit reversal, in application order.
pub fn coeff_to_slot_stages(n: usize) -> Vec<DiagMatrix> {
    let fft = SlotFft::new(n);
    let mut stages = Vec::new();
    let mut len = n;
    while len >= 2 {
        stages.push(fft_stage_inverse(&fft, len));
        len /= 2;
    }
    stages
}

/// Stages of `w ↦ U w` acting on bit-reversed input, in application order.
pub fn slot_to_coeff_stages(n: usize) -> Vec<DiagMatrix> {
    let fft = SlotFft::new(n);
    let mut stages = Vec::new();
    let mut len = 2;
    while len <= n {
        stages.push(fft_stage(&fft, len));
        len *= 2;
    }
    stages
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::bit_reverse;

    fn sample(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64 * 0.3 + 1.0).cos()))
            .collect()
    }

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-10)
    }

    #[test]
    fn stages_reproduce_special_fft() {
        for n in [2usize, 4, 8, 16, 64] {
            let w = sample(n);
            let mut expect = w.clone();
            SlotFft::new(n).forward(&mut expect);
            let mut x = w.clone();
            bit_reverse(&mut x);
            for s in slot_to_coeff_stages(n) {
                x = s.apply(&x);
            }
            assert!(close(&x, &expect), "n = {n}");
            let mut y = expect.clone();
            for s in coeff_to_slot_stages(n) {
                y = s.apply(&y);
            }
            bit_reverse(&mut y);
            assert!(close(&y, &w), "inverse n = {n}");
        }
    }

    #[test]
    fn grouped_product_matches_dense() {
        let n = 16;
        let stages = slot_to_coeff_stages(n);
        let groups = group_stages(&stages, 3, n);
        assert_eq!(groups.len(), 3);
        let v = sample(n);
        let mut a = v.clone();
        for s in &stages {
            a = s.apply(&a);
        }
        let mut b = v.clone();
        for g in &groups {
            b = g.apply(&b);
        }
        assert!(close(&a, &b));
        let dense = groups[0].to_dense();
        let direct: Vec<Complex64> = (0..n)
            .map(|k| (0..n).map(|j| dense[k][j] * v[j]).sum())
            .collect();
        assert!(close(&direct, &groups[0].apply(&v)));
    }

    #[test]
    fn stage_has_three_diagonals() {
        let fft = SlotFft::new(16);
        assert_eq!(fft_stage(&fft, 8).offsets(), vec![0, 4, 12]);
        assert_eq!(fft_stage(&fft, 16).offsets(), vec![0, 8]);
    }

    #[test]
    fn duplicate_acts_on_repeated_vector() {
        let g = fft_stage(&SlotFft::new(8), 4);
        let v = sample(8);
        let vv: Vec<Complex64> = v.iter().chain(v.iter()).copied().collect();
        let out = g.duplicate().apply(&vv);
        let single = g.apply(&v);
        assert!(close(&out[..8], &single) && close(&out[8..], &single));
    }
}
