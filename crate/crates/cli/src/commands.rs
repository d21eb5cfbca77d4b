use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use fab_core::bootstrap::{precision_bits, BootstrapConfig, Bootstrapper};
use fab_core::ckks::{
    decrypt_decode, encode, encrypt_sk, galois_for_rotation, Ciphertext, EvalKeys, Evaluator, KeyGenerator,
};
use fab_core::lr::{self, Dataset, EncryptedTrainer};
use fab_core::perf::estimate::{reference_op_time, REFERENCE_AMORTIZED_S, REFERENCE_LR_S};
use fab_core::perf::hardware::MB;
use fab_core::perf::{self, BasicOp, EvalModShape, HardwareProfile, LrCostShape};
use fab_core::serialize::{self, FabObject};
use fab_core::{Context, Error};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::config::RunConfig;

fn out_path(cfg: &RunConfig, name: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    Ok(cfg.out_dir.join(name))
}

fn random_values(rng: &mut ChaCha20Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn keygen(cfg: &RunConfig, rotations: &[isize]) -> Result<()> {
    let p = cfg.params();
    let ctx = Context::new(p.clone())?;
    let mut kg = KeyGenerator::new(&ctx, cfg.seed).with_compression(cfg.compressed_keys);
    let sk = kg.secret_key();
    let galois: Vec<usize> = rotations.iter().map(|&k| galois_for_rotation(ctx.n(), k)).collect();
    let keys = kg.eval_keys(&sk, &galois);

    let sk_path = out_path(cfg, "secret.fab")?;
    let ek_path = out_path(cfg, "eval.fab")?;
    let sk_len = serialize::write_file(&sk_path, &FabObject::SecretKey(sk), &p)?;
    let ek_len = serialize::write_file(&ek_path, &FabObject::EvalKeys(keys.clone()), &p)?;
    let relin = keys.relin.clone().expect("eval_keys always makes a relinearization key");
    let relin_file = serialize::to_bytes(&FabObject::SwitchingKey(relin), &p).len() as f64;

    let ct_formula = perf::ciphertext_bytes(p.n(), p.limb_bits, p.raised_limbs()) as f64;
    let key_formula = perf::key_bytes(&p, cfg.compressed_keys) as f64;
    println!("N=2^{} log q={} L={} dnum={} alpha={}", p.log_n, p.limb_bits, p.levels, p.dnum, p.alpha());
    println!("{:<44} {:>10}", "size", "MB");
    println!("{:<44} {:>10.2}", "ciphertext over PQ (bit-packed)", ct_formula / MB);
    let kind = if cfg.compressed_keys { "compressed" } else { "uncompressed" };
    println!("{:<44} {:>10.2}", format!("switching key, {kind} (bit-packed)"), key_formula / MB);
    println!("{:<44} {:>10.2}", format!("switching key, {kind} (FAB1 file)"), relin_file / MB);
    println!("wrote {} ({sk_len} bytes)", sk_path.display());
    println!("wrote {} ({ek_len} bytes, {} rotation keys)", ek_path.display(), galois.len());
    Ok(())
}

/// Keys from `out_dir/eval.fab` when they exist for these parameters and
/// include `galois`, otherwise freshly generated from the seed.
fn load_or_generate(cfg: &RunConfig, ctx: &Context, galois: &[usize]) -> Result<(EvalKeys, fab_core::ckks::SecretKey)> {
    let ek_path = cfg.out_dir.join("eval.fab");
    let sk_path = cfg.out_dir.join("secret.fab");
    if let (Ok(FabObject::EvalKeys(k)), Ok(FabObject::SecretKey(s))) =
        (serialize::read_file(&ek_path, ctx), serialize::read_file(&sk_path, ctx))
    {
        if galois.iter().all(|g| k.galois.contains_key(g)) && k.relin.is_some() {
            println!("using keys from {}", cfg.out_dir.display());
            return Ok((k, s));
        }
    }
    let mut kg = KeyGenerator::new(ctx, cfg.seed).with_compression(cfg.compressed_keys);
    let sk = kg.secret_key();
    Ok((kg.eval_keys(&sk, galois), sk))
}

fn time_ms<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        let out = f()?;
        best = best.min(t.elapsed().as_secs_f64() * 1e3);
        last = Some(out);
    }
    Ok((best, last.expect("at least one repetition")))
}

pub fn bench_ops(cfg: &RunConfig, reps: usize) -> Result<()> {
    let p = cfg.params();
    let ctx = Context::new(p.clone())?;
    let (keys, sk) = load_or_generate(cfg, &ctx, &[galois_for_rotation(ctx.n(), 1)])?;
    let ev = Evaluator::new(&ctx, &keys).with_datapath(cfg.datapath);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let limbs = ctx.q_limbs();
    let enc = |rng: &mut ChaCha20Rng| -> Result<Ciphertext> {
        let v: Vec<Complex64> = random_values(rng, cfg.slots).iter().map(|z| z * 0.5).collect();
        Ok(encrypt_sk(&ctx, &sk, &encode(&ctx, &v, p.scale, limbs)?, rng)?)
    };
    let a = enc(&mut rng)?;
    let b = enc(&mut rng)?;
    let hw = HardwareProfile::default();

    let (add, sum) = time_ms(reps, || Ok(ev.add(&a, &b)?))?;
    let (mult, prod) = time_ms(reps, || Ok(ev.mul(&a, &b)?))?;
    let raw = ev.mul_no_rescale(&a, &b)?;
    let (rescale, _) = time_ms(reps, || Ok(ev.rescale(&raw)?))?;
    let (rotate, rot) = time_ms(reps, || Ok(ev.rotate(&a, 1)?))?;

    println!("N=2^{} L={} dnum={} datapath={:?} ({} slots, best of {})", p.log_n, p.levels, p.dnum, cfg.datapath, cfg.slots, reps.max(1));
    println!("{:<8} {:>12} {:>12} {:>12} {:>12}", "op", "measured_ms", "model_ms", "table_ms", "levels_used");
    let rows = [
        (BasicOp::Add, add, &sum),
        (BasicOp::Mult, mult, &prod),
        (BasicOp::Rescale, rescale, &prod),
        (BasicOp::Rotate, rotate, &rot),
    ];
    for (op, ms, out) in rows {
        let model = perf::estimate_op_time(op, &p, &hw) * 1e3;
        println!(
            "{:<8} {:>12.3} {:>12.3} {:>12.2} {:>12}",
            op.name(),
            ms,
            model,
            reference_op_time(op) * 1e3,
            limbs - out.limbs()
        );
    }
    Ok(())
}

pub fn bootstrap(cfg: &RunConfig, model_only: bool, min_bits: f64) -> Result<()> {
    let p = cfg.params();
    let hw = HardwareProfile::default();
    let shape = EvalModShape::default();
    println!(
        "N=2^{} L={} fftIter={} slots={} levels after bootstrapping={}",
        p.log_n,
        p.levels,
        p.fft_iter,
        cfg.slots,
        p.levels_after_bootstrap().map_or("none".into(), |l| l.to_string())
    );
    match perf::estimate_bootstrap(&p, cfg.slots, &shape, &hw) {
        Ok(r) => {
            let am = r.amortized_s.unwrap_or(f64::NAN);
            println!("model: T_boot {:.3} ms, amortized {:.4} us/slot (table {:.3} us at 2^15 slots)", r.seconds * 1e3, am * 1e6, REFERENCE_AMORTIZED_S * 1e6);
        }
        Err(e) => println!("model: {e}"),
    }
    if model_only {
        return Ok(());
    }
    let ctx = Context::new(p.clone())?;
    let bcfg = BootstrapConfig::new(&p, cfg.slots);
    let bs = Bootstrapper::new(&ctx, bcfg.clone())?;
    let t = Instant::now();
    let mut kg = KeyGenerator::new(&ctx, cfg.seed);
    let sk = kg.secret_key();
    let keys = bs.generate_keys(&mut kg, &sk, &[]);
    println!("key generation: {:.2} s, {} rotation keys", t.elapsed().as_secs_f64(), keys.core.galois.len());

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let vals = random_values(&mut rng, cfg.slots);
    let ct = encrypt_sk(&ctx, &sk, &encode(&ctx, &vals, bcfg.input_scale(&ctx), 1)?, &mut rng)?;
    let (out, trace) = bs.bootstrap_traced(&keys, &ct, cfg.datapath)?;
    let got = decrypt_decode(&ctx, &sk, &out)?;
    let bits = precision_bits(&vals, &got);
    for (name, d) in &trace.phases {
        println!("  {name:<14} {:>10.3} s", d.as_secs_f64());
    }
    println!("wall time {:.2} s, {} key switches", trace.total().as_secs_f64(), trace.keyswitches);
    println!("limbs after {} (levels {})", out.limbs(), out.level());
    let verdict = if bits >= min_bits { "PASS" } else { "FAIL" };
    println!("precision {bits:.2} bits (threshold {min_bits}) {verdict}");
    Ok(())
}

pub fn explore(cfg: &RunConfig, dnums: &[usize], fft_iters: &[usize], log_pq: Option<u32>, out: Option<&Path>) -> Result<()> {
    let p = cfg.params();
    let budget = log_pq.unwrap_or_else(|| p.log_pq());
    let rows = perf::explore_params(&p, budget, dnums, fft_iters, cfg.slots, &EvalModShape::default(), &HardwareProfile::default());
    let sink: Box<dyn std::io::Write> = match out {
        Some(path) => Box::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    if let Some(path) = out {
        eprintln!("wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(())
}

pub fn lr_train(cfg: &RunConfig, data: Option<&Path>, synthetic: usize, holdout: Option<usize>, shadow_only: bool) -> Result<()> {
    let lc = &cfg.lr;
    let ds = match data {
        Some(path) => Dataset::load_csv(path, lc.features)?,
        None => lr::synthetic_digits(synthetic, cfg.seed),
    };
    let holdout = holdout.unwrap_or(ds.len() / 5);
    let (train, test) = ds.split(holdout)?;
    println!("{} training / {} holdout samples, {} features, minibatch {}, {} iterations", train.len(), test.len(), lc.features, lc.minibatch, lc.iterations);

    let hw = HardwareProfile::default();
    let full = fab_core::SchemeParams::fpga();
    for (devices, table) in REFERENCE_LR_S {
        let e = perf::estimate_lr(devices, &full, &LrCostShape::default(), &EvalModShape::default(), &hw)?;
        println!("model: {devices} device(s) {:.3} s/iteration (table {table} s, comm {:.2} ms)", e.total_s, e.comm_s * 1e3);
    }

    let log_path = out_path(cfg, "lr_log.csv")?;
    let weights_path = out_path(cfg, "lr_weights.csv")?;
    let mut log = csv::Writer::from_path(&log_path)?;
    let mut weights = csv::Writer::from_path(&weights_path)?;

    if shadow_only {
        let (states, range) = lr::train_shadow(lc, &train)?;
        log.write_record(["iteration", "shadow_loss", "holdout_accuracy"])?;
        for (t, s) in states.iter().enumerate() {
            let w = s.weights(lc);
            let loss = lr::logistic_loss(&train, &w);
            let acc = lr::accuracy(&test, &w);
            println!("iter {t:>3} loss {loss:.5} holdout {acc:.4}");
            log.write_record([t.to_string(), loss.to_string(), acc.to_string()])?;
        }
        let w = states.last().map(|s| s.weights(lc)).unwrap_or_default();
        weights.write_record(["feature", "shadow"])?;
        for (i, x) in w.iter().enumerate() {
            weights.write_record([i.to_string(), x.to_string()])?;
        }
        println!("max |inner product| {:.3}, max scaled weight {:.4}", range.max_abs_inner, range.max_abs_weight);
        log.flush()?;
        weights.flush()?;
        return Ok(());
    }

    let p = cfg.params();
    let ctx = Context::new(p)?;
    let t = Instant::now();
    let mut trainer = EncryptedTrainer::new(&ctx, lc.clone())?;
    println!("key generation {:.2} s", t.elapsed().as_secs_f64());
    let report = trainer.train(&train, &test).map_err(|e| match e {
        Error::LevelUnderflow { .. } => anyhow::anyhow!("{e} (scheduling bug)"),
        other => other.into(),
    })?;

    log.write_record([
        "iteration", "gamma", "eta", "start_limbs", "end_limbs", "levels", "encrypted_loss", "shadow_loss",
        "max_weight_error", "compute_s", "bootstrap_s", "comm_s",
    ])?;
    for l in &report.log {
        println!(
            "iter {:>3} levels {} loss enc {:.5} shadow {:.5} |Δw| {:.2e} compute {:.1} s bootstrap {:.1} s",
            l.iteration, l.levels_consumed, l.encrypted_loss, l.shadow_loss, l.max_weight_error, l.compute_s, l.bootstrap_s
        );
        log.write_record([
            l.iteration.to_string(),
            l.gamma.to_string(),
            l.eta.to_string(),
            l.start_limbs.to_string(),
            l.end_limbs.to_string(),
            l.levels_consumed.to_string(),
            l.encrypted_loss.to_string(),
            l.shadow_loss.to_string(),
            l.max_weight_error.to_string(),
            l.compute_s.to_string(),
            l.bootstrap_s.to_string(),
            l.comm_s.to_string(),
        ])?;
    }
    weights.write_record(["feature", "encrypted", "shadow"])?;
    for (i, (a, b)) in report.weights.iter().zip(&report.shadow_weights).enumerate() {
        weights.write_record([i.to_string(), a.to_string(), b.to_string()])?;
    }
    log.flush()?;
    weights.flush()?;
    if report.range.max_abs_inner > lc.sigmoid_bound {
        println!("warning: inner products reached {:.2}, outside the sigmoid fit range", report.range.max_abs_inner);
    }
    println!("total depth {} over {} iterations", report.total_depth, report.log.len());
    println!(
        "holdout accuracy: encrypted {:.4}, shadow {:.4}; agreement {:.4}",
        report.holdout_accuracy, report.shadow_holdout_accuracy, report.agreement
    );
    if lc.devices > 1 {
        let comm: f64 = report.log.iter().map(|l| l.comm_s).sum();
        println!("{} simulated devices, modeled exchange time {:.2} ms total", lc.devices, comm * 1e3);
    }
    println!("wrote {} and {}", log_path.display(), weights_path.display());
    Ok(())
}

pub fn serialize(cfg: &RunConfig, out: &Path, values: &[f64], limbs: Option<usize>) -> Result<()> {
    let p = cfg.params();
    let ctx = Context::new(p.clone())?;
    let mut kg = KeyGenerator::new(&ctx, cfg.seed);
    let sk = kg.secret_key();
    let vals: Vec<Complex64> = if values.is_empty() {
        (0..cfg.slots).map(|i| Complex64::new(i as f64 / cfg.slots as f64, 0.0)).collect()
    } else {
        values.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    };
    if !vals.len().is_power_of_two() || vals.len() > ctx.n() / 2 {
        bail!("{} values: need a power of two up to N/2", vals.len());
    }
    let limbs = limbs.unwrap_or(ctx.q_limbs());
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let ct = encrypt_sk(&ctx, &sk, &encode(&ctx, &vals, p.scale, limbs)?, &mut rng)?;
    let len = serialize::write_file(out, &FabObject::Ciphertext(ct), &p)?;
    println!("wrote {} ({len} bytes, {} slots, {limbs} limbs)", out.display(), vals.len());
    Ok(())
}

pub fn deserialize(cfg: &RunConfig, path: &Path, decrypt: bool) -> Result<()> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let h = serialize::read_header(&bytes)?;
    println!("{}: FAB1 v{} {:?}", path.display(), h.version, h.kind);
    println!(
        "  N={} log q={} L={} dnum={} fftIter={} scale=2^{:.1}",
        h.params.n,
        h.params.log_q,
        h.params.levels,
        h.params.dnum,
        h.params.fft_iter,
        h.params.scale.log2()
    );
    let p = cfg.params();
    let ctx = Context::new(p.clone())?;
    let obj = serialize::from_bytes(&bytes, &ctx)?;
    let again = serialize::to_bytes(&obj, &p);
    if again != bytes {
        bail!("re-encoding differs from the file");
    }
    println!("  roundtrip: byte-identical ({} bytes)", bytes.len());
    match &obj {
        FabObject::Ciphertext(ct) => {
            println!("  ciphertext: {} limbs, {} slots, scale 2^{:.2}", ct.limbs(), ct.slots, ct.scale.log2());
            if decrypt {
                let sk = KeyGenerator::new(&ctx, cfg.seed).secret_key();
                let v = decrypt_decode(&ctx, &sk, ct)?;
                let shown: Vec<String> = v.iter().take(8).map(|z| format!("{:.6}", z.re)).collect();
                println!("  values: {}{}", shown.join(", "), if v.len() > 8 { ", ..." } else { "" });
            }
        }
        FabObject::SwitchingKey(k) => println!("  switching key: {} columns, compressed {}", k.columns.len(), k.is_compressed()),
        FabObject::SecretKey(s) => println!("  secret key: hamming weight {}", s.hamming_weight()),
        FabObject::EvalKeys(k) => println!("  evaluation keys: relinearization {}, {} Galois keys", k.relin.is_some(), k.galois.len()),
    }
    Ok(())
}
