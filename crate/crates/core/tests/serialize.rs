use fab_core::ckks::{decrypt_decode, encode, encrypt_sk, galois_for_rotation, KeyGenerator};
use fab_core::serialize::*;
use fab_core::{Context, Error, SchemeParams};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn params() -> SchemeParams {
    SchemeParams {
        log_n: 8,
        levels: 4,
        dnum: 2,
        ..SchemeParams::desk()
    }
}

fn ciphertext_bytes(ctx: &Context, seed: u64) -> Vec<u8> {
    let mut kg = KeyGenerator::new(ctx, seed);
    let sk = kg.secret_key();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let v = vec![Complex64::new(0.25, -0.5); 8];
    let pt = encode(ctx, &v, ctx.params().scale, ctx.q_limbs()).unwrap();
    let ct = encrypt_sk(ctx, &sk, &pt, &mut rng).unwrap();
    to_bytes(&FabObject::Ciphertext(ct), ctx.params())
}

#[test]
fn ciphertext_roundtrip_is_byte_identical() {
    let ctx = Context::new(params()).unwrap();
    let mut kg = KeyGenerator::new(&ctx, 1);
    let sk = kg.secret_key();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let v: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64 / 8.0, 0.1)).collect();
    let pt = encode(&ctx, &v, ctx.params().scale, 3).unwrap();
    let ct = encrypt_sk(&ctx, &sk, &pt, &mut rng).unwrap();
    let bytes = to_bytes(&FabObject::Ciphertext(ct.clone()), ctx.params());
    assert_eq!(&bytes[..4], b"FAB1");
    let h = read_header(&bytes).unwrap();
    assert_eq!(h.kind, ObjectKind::Ciphertext);
    assert_eq!(h.params.n, 256);
    assert_eq!(h.params.log_q, 30);
    let FabObject::Ciphertext(back) = from_bytes(&bytes, &ctx).unwrap() else {
        panic!("wrong kind");
    };
    assert_eq!(back, ct);
    assert_eq!(to_bytes(&FabObject::Ciphertext(back.clone()), ctx.params()), bytes);
    let got = decrypt_decode(&ctx, &sk, &back).unwrap();
    assert!((got[3] - v[3]).norm() < 1e-4);
}

#[test]
fn residues_are_little_endian_words() {
    let ctx = Context::new(params()).unwrap();
    let bytes = ciphertext_bytes(&ctx, 2);
    let FabObject::Ciphertext(ct) = from_bytes(&bytes, &ctx).unwrap() else {
        panic!()
    };
    // header 64, scale + slots 16, rep + count + basis (5 limbs) 56
    let off = 64 + 16 + 56;
    let first = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    assert_eq!(first, ct.c0.limbs[0][0]);
    let expect = 64 + 16 + 2 * (56 + 5 * 256 * 8);
    assert_eq!(bytes.len(), expect);
}

#[test]
fn errors_are_distinct() {
    let ctx = Context::new(params()).unwrap();
    let bytes = ciphertext_bytes(&ctx, 3);

    for cut in [0, 3, 20, 70, bytes.len() - 1] {
        match from_bytes(&bytes[..cut], &ctx) {
            Err(Error::Truncated { needed }) => assert!(needed > 0),
            other => panic!("cut {cut}: {other:?}"),
        }
    }

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(from_bytes(&bad, &ctx), Err(Error::BadMagic)));

    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(matches!(from_bytes(&bad, &ctx), Err(Error::UnsupportedVersion(9))));

    let other = Context::new(SchemeParams { levels: 5, ..params() }).unwrap();
    assert!(matches!(from_bytes(&bytes, &other), Err(Error::ParamsMismatch(_))));

    let mut long = bytes.clone();
    long.push(0);
    assert!(from_bytes(&long, &ctx).is_err());
}

#[test]
fn compressed_keys_store_seeds() {
    let ctx = Context::new(params()).unwrap();
    let mut plain = KeyGenerator::new(&ctx, 4);
    let sk = plain.secret_key();
    let full = plain.relin_key(&sk);
    let mut comp = KeyGenerator::new(&ctx, 4).with_compression(true);
    let sk2 = comp.secret_key();
    assert_eq!(sk.coeffs, sk2.coeffs);
    let small = comp.relin_key(&sk2);
    assert!(small.is_compressed());

    let full_bytes = to_bytes(&FabObject::SwitchingKey(full.clone()), ctx.params());
    let small_bytes = to_bytes(&FabObject::SwitchingKey(small.clone()), ctx.params());
    let body = |b: &Vec<u8>| b.len() - 64;
    // Half the polynomials plus a 32-byte seed.
    assert!(body(&small_bytes) < body(&full_bytes) / 2 + 64);

    let FabObject::SwitchingKey(back) = from_bytes(&small_bytes, &ctx).unwrap() else {
        panic!()
    };
    assert_eq!(back, small);
    let FabObject::SwitchingKey(back) = from_bytes(&full_bytes, &ctx).unwrap() else {
        panic!()
    };
    assert_eq!(back, full);
}

#[test]
fn key_sets_and_secrets_roundtrip_through_files() {
    let ctx = Context::new(params()).unwrap();
    let mut kg = KeyGenerator::new(&ctx, 5);
    let sk = kg.secret_key();
    let keys = kg.eval_keys(&sk, &[galois_for_rotation(ctx.n(), 1), galois_for_rotation(ctx.n(), 3)]);
    let dir = tempfile::tempdir().unwrap();
    let kpath = dir.path().join("eval.fab");
    let spath = dir.path().join("secret.fab");
    write_file(&kpath, &FabObject::EvalKeys(keys.clone()), ctx.params()).unwrap();
    write_file(&spath, &FabObject::SecretKey(sk.clone()), ctx.params()).unwrap();
    let FabObject::EvalKeys(back) = read_file(&kpath, &ctx).unwrap() else {
        panic!()
    };
    assert_eq!(back.relin, keys.relin);
    assert_eq!(back.galois, keys.galois);
    let FabObject::SecretKey(s) = read_file(&spath, &ctx).unwrap() else {
        panic!()
    };
    assert_eq!(s.coeffs, sk.coeffs);
    assert_eq!(s.poly, sk.poly);
    assert!(matches!(read_file(&dir.path().join("missing"), &ctx), Err(Error::Io(_))));
}

#[test]
fn same_seed_same_bytes() {
    let ctx = Context::new(params()).unwrap();
    assert_eq!(ciphertext_bytes(&ctx, 6), ciphertext_bytes(&ctx, 6));
    assert_ne!(ciphertext_bytes(&ctx, 6), ciphertext_bytes(&ctx, 7));
}
