use fab_core::rns::*;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

/// Unique integer in `[0, Q)` with the given residues.
fn crt_recombine(x: &[u64], basis: &[Modulus]) -> BigUint {
    let big_q: BigUint = basis.iter().map(|m| BigUint::from(m.value())).product();
    let mut acc = BigUint::zero();
    for (&r, m) in x.iter().zip(basis) {
        let q = BigUint::from(m.value());
        let hat = &big_q / &q;
        let inv = (&hat % &q).modpow(&BigUint::from(m.value() - 2), &q);
        acc += BigUint::from(r) * inv % &q * hat;
    }
    acc % big_q
}

fn big_mod(x: &BigUint, q: u64) -> u64 {
    (x % q).to_u64().unwrap()
}

fn chain(n: usize, count: usize, bits: u32) -> Vec<Modulus> {
    generate_modulus_chain(n, count, bits, DEFAULT_SHIFTS).unwrap()
}

#[test]
fn recombine_examples() {
    let basis = vec![Modulus::new(13, 2, 2, 0).unwrap(), Modulus::new(17, 2, 2, 1).unwrap()];
    assert_eq!(crt_recombine(&[9, 15], &basis), BigUint::from(100u32));
    assert_eq!(crt_recombine(&[0, 0], &basis), BigUint::zero());
    let found = (0u64..221).find(|x| x % 13 == 9 && x % 17 == 15);
    assert_eq!(found, Some(100));
}

#[test]
fn full_chain_shape() {
    let c = chain(1 << 16, 32, 54);
    assert_eq!(c.len(), 32);
    for (i, m) in c.iter().enumerate() {
        assert_eq!(m.value() % (1 << 17), 1);
        assert_eq!(m.bits(), 54);
        assert!(is_prime(m.value()));
        assert!(c[..i].iter().all(|o| o.value() != m.value()));
        assert_eq!(m.madd().len(), 63);
        assert_eq!(m.reduce_iterations(), 9);
    }
    // 32 tables of 63 entries.
    assert_eq!(c.iter().map(|m| m.madd().len()).sum::<usize>(), 2016);
}

#[test]
fn eight_bit_chain_matches_sieve() {
    let sieve: Vec<u64> = (128u64..256).rev().filter(|&p| p % 32 == 1 && is_prime(p)).collect();
    assert_eq!(sieve, vec![193]);
    assert_eq!(chain(16, 1, 8)[0].value(), 193);
    assert!(matches!(
        generate_modulus_chain(16, 2, 8, 6),
        Err(fab_core::Error::InsufficientPrimes { .. })
    ));
    assert!(generate_modulus_chain(12, 1, 30, 6).is_err());
    assert!(generate_modulus_chain(16, 1, 55, 6).is_err());
}

#[test]
fn madd_matches_definition() {
    for shifts in [1u32, 3, 6, 8] {
        for m in generate_modulus_chain(1 << 8, 3, 40, shifts).unwrap() {
            let q = m.value() as u128;
            let lq = m.bits();
            let table = m.madd();
            assert_eq!(table.len(), (1 << shifts) - 1);
            for i in 1..(1usize << shifts) {
                let want = (0..shifts)
                    .filter(|j| i >> j & 1 == 1)
                    .map(|j| (1u128 << (lq + j)) % q)
                    .sum::<u128>()
                    % q;
                assert_eq!(table[i - 1] as u128, want);
            }
        }
    }
}

#[test]
fn reduction_exhaustive_small_moduli() {
    for bits in 4..=12u32 {
        for m in generate_modulus_chain(2, 1, bits, DEFAULT_SHIFTS).unwrap() {
            let q = m.value() as u128;
            for a in 0..(1u128 << (2 * bits)) {
                assert_eq!(m.reduce(a) as u128, a % q, "a = {a}, q = {q}");
            }
            assert!(m.try_reduce(1u128 << (2 * bits)).is_err());
        }
    }
}

#[test]
fn decompose_recombine_roundtrip() {
    let c = chain(1 << 4, 4, 30);
    let roles = vec![LimbRole::Original; 4];
    let basis = RnsBasis::new(c.clone(), roles).unwrap();
    for (i, m) in basis.moduli().iter().enumerate() {
        let rest: u128 = basis
            .moduli()
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .fold(1, |a, (_, o)| a * o.value() as u128 % m.value() as u128);
        assert_eq!(rest * basis.q_hat_inv()[i] as u128 % m.value() as u128, 1);
    }
    for x in [0i128, 1, 12345, (1i128 << 100) + 7] {
        let r = basis.decompose(x);
        assert_eq!(crt_recombine(&r, basis.moduli()), BigUint::from(x as u128));
    }
    assert!(RnsBasis::new(vec![c[0].clone(), c[0].clone()], vec![LimbRole::Original; 2]).is_err());
}

fn conv_setup() -> (Vec<Modulus>, Vec<Modulus>) {
    let all = chain(1 << 4, 7, 30);
    (all[..3].to_vec(), all[3..].to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reduce_agrees_with_wide_division(idx in 0usize..8, hi in any::<u64>(), lo in any::<u64>()) {
        let c = chain(1 << 4, 8, 54);
        let m = &c[idx];
        let a = (((hi as u128) << 64) | lo as u128) >> (128 - 2 * m.bits());
        prop_assert_eq!(m.reduce(a) as u128, a % m.value() as u128);
    }

    #[test]
    fn arithmetic_matches_oracle(a in any::<u64>(), b in any::<u64>()) {
        let c = chain(1 << 4, 2, 54);
        for m in &c {
            let q = m.value();
            let (a, b) = (a % q, b % q);
            prop_assert_eq!(m.add(a, b) as u128, (a as u128 + b as u128) % q as u128);
            prop_assert_eq!(m.sub(a, b) as u128, (a as u128 + q as u128 - b as u128) % q as u128);
            prop_assert_eq!(m.mul(a, b) as u128, a as u128 * b as u128 % q as u128);
            prop_assert_eq!(m.mul_shoup(a, b, m.shoup(b)), m.mul(a, b));
            if a != 0 {
                prop_assert_eq!(m.mul(a, m.inv(a)), 1);
            }
        }
    }

    #[test]
    fn fast_conversion_within_l_multiples(r in proptest::collection::vec(any::<u64>(), 3)) {
        let (src, dst) = conv_setup();
        let x: Vec<u64> = r.iter().zip(&src).map(|(v, m)| v % m.value()).collect();
        let value = crt_recombine(&x, &src);
        let big_q: BigUint = src.iter().map(|m| BigUint::from(m.value())).product();
        let conv = BasisConverter::new(&src, &dst).unwrap();
        let fast = conv.convert(&x);
        let naive = conv.convert_naive(&x);
        let exact = conv.convert_exact(&x);
        prop_assert_eq!(&fast, &naive);
        for (k, p) in dst.iter().enumerate() {
            prop_assert_eq!(exact[k], big_mod(&value, p.value()));
            let ok = (0..src.len() as u64)
                .any(|e| big_mod(&(&value + &big_q * e), p.value()) == fast[k]);
            prop_assert!(ok);
        }
    }

    #[test]
    fn centered_poly_conversion_is_exact(r in proptest::collection::vec(any::<u64>(), 3 * 8)) {
        let (src, dst) = conv_setup();
        let limbs: Vec<Vec<u64>> = (0..3)
            .map(|i| r[i * 8..(i + 1) * 8].iter().map(|v| v % src[i].value()).collect())
            .collect();
        let refs: Vec<&[u64]> = limbs.iter().map(Vec::as_slice).collect();
        let conv = BasisConverter::new(&src, &dst).unwrap();
        let out = conv.convert_poly(&refs, true);
        prop_assert_eq!(&out, &conv.convert_poly_naive(&refs, true));
        let big_q: BigUint = src.iter().map(|m| BigUint::from(m.value())).product();
        for c in 0..8 {
            let x: Vec<u64> = limbs.iter().map(|l| l[c]).collect();
            let v = crt_recombine(&x, &src);
            let upper = &v * 2u32 > big_q;
            for (k, p) in dst.iter().enumerate() {
                let pv = p.value();
                let pos = big_mod(&v, pv);
                let want = if upper { (pos + pv - big_mod(&big_q, pv)) % pv } else { pos };
                prop_assert_eq!(out[k][c], want);
            }
        }
    }

    #[test]
    fn multiplication_count(l in 1usize..6, k in 1usize..8) {
        let all = chain(1 << 4, l + k, 30);
        let conv = BasisConverter::new(&all[..l], &all[l..]).unwrap();
        prop_assert_eq!(conv.mult_count(), (l * (k + 1)) as u64);
        prop_assert_eq!(conv.naive_mult_count(), (2 * l * k) as u64);
    }
}
