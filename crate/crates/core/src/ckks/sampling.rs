//! Randomness for keys, encryption noise and uniform masks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::poly::{Poly, Representation, Ring};

/// Dense ternary coefficients, each uniform in {-1, 0, 1}.
pub fn ternary<R: Rng>(rng: &mut R, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-1i64..=1)).collect()
}

/// Exactly `h` nonzero coefficients, each ±1.
pub fn sparse_ternary<R: Rng>(rng: &mut R, n: usize, h: usize) -> Vec<i64> {
    let mut out = vec![0i64; n];
    for idx in rand::seq::index::sample(rng, n, h) {
        out[idx] = if rng.random::<bool>() { 1 } else { -1 };
    }
    out
}

/// Rounded Gaussian with standard deviation `sigma`, cut at 6σ.
pub fn gaussian<R: Rng>(rng: &mut R, n: usize, sigma: f64) -> Vec<i64> {
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let bound = (6.0 * sigma).ceil();
    (0..n)
        .map(|_| loop {
            let x: f64 = normal.sample(rng);
            if x.abs() <= bound {
                break x.round() as i64;
            }
        })
        .collect()
}

/// Uniform residues over `basis`, directly in evaluation form.
pub fn uniform<R: Rng>(rng: &mut R, ring: &Ring, basis: &[usize]) -> Poly {
    let limbs = basis
        .iter()
        .map(|&b| {
            let q = ring.modulus(b).value();
            (0..ring.n()).map(|_| rng.random_range(0..q)).collect()
        })
        .collect();
    Poly {
        rep: Representation::Evaluation,
        basis: basis.to_vec(),
        limbs,
    }
}

/// Uniform polynomial expanded from a seed; stream `column` keeps key columns independent.
pub fn uniform_from_seed(seed: [u8; 32], column: u64, ring: &Ring, basis: &[usize]) -> Poly {
    let mut rng = ChaCha20Rng::from_seed(seed);
    rng.set_stream(column);
    uniform(&mut rng, ring, basis)
}
