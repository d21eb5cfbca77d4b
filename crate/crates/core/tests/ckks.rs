use fab_core::ckks::{self, Ciphertext, Evaluator, KeyGenerator};
use fab_core::{Context, SchemeParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn small_params() -> SchemeParams {
    SchemeParams {
        log_n: 10,
        limb_bits: 40,
        levels: 5,
        dnum: 2,
        fft_iter: 1,
        scale: 2f64.powi(40),
        lambda: 0,
        ..SchemeParams::fpga()
    }
}

fn random_slots(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

struct Setup {
    ctx: Context,
    sk: ckks::SecretKey,
    pk: ckks::PublicKey,
    keys: ckks::EvalKeys,
}

fn setup() -> Setup {
    let ctx = Context::new(small_params()).unwrap();
    let mut kg = KeyGenerator::new(&ctx, 7);
    let sk = kg.secret_key();
    let pk = kg.public_key(&sk);
    let n = ctx.n();
    let galois = vec![
        ckks::galois_for_rotation(n, 1),
        ckks::galois_for_rotation(n, -1),
        ckks::galois_for_rotation(n, 3),
        ckks::galois_for_conjugation(n),
    ];
    let keys = kg.eval_keys(&sk, &galois);
    Setup { ctx, sk, pk, keys }
}

fn enc(s: &Setup, v: &[Complex64], rng: &mut ChaCha20Rng) -> Ciphertext {
    let pt = ckks::encode(&s.ctx, v, s.ctx.params().scale, s.ctx.q_limbs()).unwrap();
    ckks::encrypt(&s.ctx, &s.pk, &pt, rng).unwrap()
}

fn dec(s: &Setup, ct: &Ciphertext) -> Vec<Complex64> {
    ckks::decrypt_decode(&s.ctx, &s.sk, ct).unwrap()
}

#[test]
fn roundtrip_and_zero() {
    let s = setup();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let v = random_slots(&mut rng, 512);
    let ct = enc(&s, &v, &mut rng);
    assert_eq!(ct.limbs(), 6);
    assert!(max_err(&dec(&s, &ct), &v) < 2f64.powi(-25));
    let z = vec![Complex64::new(0.0, 0.0); 512];
    let ct = enc(&s, &z, &mut rng);
    assert!(max_err(&dec(&s, &ct), &z) < 2f64.powi(-25));
}

#[test]
fn add_mult_rescale() {
    let s = setup();
    let ev = Evaluator::new(&s.ctx, &s.keys);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let u = random_slots(&mut rng, 512);
    let v = random_slots(&mut rng, 512);
    let (cu, cv) = (enc(&s, &u, &mut rng), enc(&s, &v, &mut rng));
    let sum = ev.add(&cu, &cv).unwrap();
    let expect: Vec<_> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
    assert!(max_err(&dec(&s, &sum), &expect) < 2f64.powi(-24));
    let prod = ev.mul(&cu, &cv).unwrap();
    assert_eq!(prod.limbs(), cu.limbs() - 1);
    let expect: Vec<_> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
    assert!(max_err(&dec(&s, &prod), &expect) < 2f64.powi(-20));
    let raw = ev.mul_no_rescale(&cu, &cv).unwrap();
    assert_eq!(raw.limbs(), cu.limbs());
    let q_last = s.ctx.q(cu.limbs() - 1) as f64;
    let r = ev.rescale(&raw).unwrap();
    assert_eq!(r.scale, raw.scale / q_last);
    assert_eq!(r.limbs(), raw.limbs() - 1);
    assert!(max_err(&dec(&s, &r), &expect) < 2f64.powi(-20));
}

#[test]
fn rotation_moves_slots_right() {
    let s = setup();
    let ev = Evaluator::new(&s.ctx, &s.keys);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let v = random_slots(&mut rng, 512);
    let ct = enc(&s, &v, &mut rng);
    let r = ev.rotate(&ct, 1).unwrap();
    let mut expect = v.clone();
    expect.rotate_right(1);
    assert!(max_err(&dec(&s, &r), &expect) < 2f64.powi(-20));
    let back = ev.rotate(&r, -1).unwrap();
    assert!(max_err(&dec(&s, &back), &v) < 2f64.powi(-20));
    let c = ev.conjugate(&ct).unwrap();
    let expect: Vec<_> = v.iter().map(|z| z.conj()).collect();
    assert!(max_err(&dec(&s, &c), &expect) < 2f64.powi(-20));
    assert!(ev.rotate(&ct, 2).is_err());
}

#[test]
fn sparse_slots_rotate_within_n() {
    let s = setup();
    let ev = Evaluator::new(&s.ctx, &s.keys);
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let v = random_slots(&mut rng, 16);
    let ct = enc(&s, &v, &mut rng);
    let r = ev.rotate(&ct, 3).unwrap();
    let mut expect = v.clone();
    expect.rotate_right(3);
    assert!(max_err(&dec(&s, &r), &expect) < 2f64.powi(-20));
}

#[test]
fn constants_and_levels() {
    let s = setup();
    let ev = Evaluator::new(&s.ctx, &s.keys);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let v = random_slots(&mut rng, 512);
    let ct = enc(&s, &v, &mut rng);
    let c = Complex64::new(0.25, -1.5);
    let target = 2f64.powi(38);
    let m = ev.mul_const(&ct, c, target).unwrap();
    assert_eq!(m.scale, target);
    let expect: Vec<_> = v.iter().map(|z| z * c).collect();
    assert!(max_err(&dec(&s, &m), &expect) < 2f64.powi(-20));
    let a = ev.add_const(&ct, c).unwrap();
    let expect: Vec<_> = v.iter().map(|z| z + c).collect();
    assert!(max_err(&dec(&s, &a), &expect) < 2f64.powi(-20));
    let i = ev.mul_i(&ct);
    let expect: Vec<_> = v.iter().map(|z| z * Complex64::i()).collect();
    assert!(max_err(&dec(&s, &i), &expect) < 2f64.powi(-20));
    assert!(ev.add(&ct, &m).is_err());
    let auto = ev.add_auto(&ct, &m).unwrap();
    let expect: Vec<_> = v.iter().map(|z| z + z * c).collect();
    assert!(max_err(&dec(&s, &auto), &expect) < 2f64.powi(-18));
    let mut x = ct.clone();
    while x.limbs() > 1 {
        x = ev.mul_const(&x, Complex64::new(1.0, 0.0), ct.scale).unwrap();
    }
    assert!(matches!(ev.mul(&x, &x), Err(fab_core::Error::NeedsBootstrapping { .. })));
}
