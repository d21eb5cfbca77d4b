use fab_core::bootstrap::amortized_mult_time;
use fab_core::ckks::sampling::uniform;
use fab_core::ckks::{encode, encrypt_sk, Evaluator, KeyGenerator};
use fab_core::keyswitch::{key_switch, Datapath, OpCounters};
use fab_core::perf::cost::record_cycles;
use fab_core::perf::estimate::*;
use fab_core::perf::hardware::MB;
use fab_core::perf::*;
use fab_core::poly::Representation;
use fab_core::{Context, SchemeParams};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn hw() -> HardwareProfile {
    HardwareProfile::default()
}

#[test]
fn profile_constants() {
    let h = hw();
    h.validate().unwrap();
    assert_eq!((h.cycles_modadd, h.cycles_modsub), (7, 7));
    assert_eq!((h.cycles_intmul, h.cycles_modreduce), (12, 12));
    assert_eq!(h.cmac_cycles_per_limb, 11_399);
    assert_eq!(h.cmac_cycles_per_ct, 546_980);
    assert_eq!(h.clock_hz, 3e8);
    assert_eq!(h.n_functional_units, 256);
    assert_eq!(h.port_bytes_per_cycle(), 1024);
    let bad = HardwareProfile {
        clock_hz: 0.0,
        ..hw()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn bank_sizes_follow_polynomial_size() {
    let h = hw();
    let pb = poly_bytes(1 << 16, 54);
    assert!((pb as f64 / MB - 0.442).abs() < 1e-3);
    // 16 polynomials per URAM bank.
    assert!((16.0 * pb as f64 / MB - 7.08).abs() < 0.01);
    assert_eq!(h.uram_bytes(pb), 80 * pb);
    assert_eq!(h.bram_bytes(pb), 20 * pb);
    // 100 polynomials: 44.2 MB decimal, 42.2 MiB; the stated total sits between.
    let banks = (h.uram_bytes(pb) + h.bram_bytes(pb)) as f64;
    assert!((banks / h.onchip_total_bytes as f64 - 1.0).abs() < 0.03);
}

#[test]
fn ntt_cycle_examples() {
    assert_eq!(HardwareProfile::ntt_cycles_raw(1 << 16, 1), 2048);
    assert_eq!(HardwareProfile::ntt_cycles_raw(512, 1), 9);
    assert_eq!(HardwareProfile::ntt_cycles_raw(1 << 14, 1), 448);
    assert_eq!(HardwareProfile::ntt_cycles_raw(1 << 16, 3), 3 * 2048);
    let h = hw();
    assert_eq!(h.ntt_cycles(1 << 16, 0), 0);
    assert_eq!(h.ntt_cycles(1 << 16, 1), 1024);
}

#[test]
fn ntt_throughput_both_readings() {
    // 8 limbs of 54 bits at N = 2^14 is the largest modulus inside the
    // 128-bit budget for that degree.
    let (per_limb, per_poly) = ntt_throughput(1 << 14, 8, &hw());
    assert!(within_band(per_poly, 167e3), "{per_poly}");
    assert!(per_limb > 7.0 * per_poly);
}

#[test]
fn elementwise_cycle_examples() {
    let h = hw();
    assert_eq!(h.elementwise_cycles(ElemOp::Add, 1 << 16, 1), 263);
    assert_eq!(h.elementwise_cycles(ElemOp::Sub, 1 << 16, 1), 263);
    assert_eq!(h.elementwise_cycles(ElemOp::MulReduce, 1 << 16, 1), 256 + 24);
    assert_eq!(h.elementwise_cycles(ElemOp::Add, 1 << 16, 0), 0);
}

#[test]
fn size_identities() {
    let p = SchemeParams::fpga();
    let ct = ciphertext_bytes(p.n(), p.limb_bits, p.raised_limbs()) as f64 / MB;
    assert!((ct - 28.3).abs() < 0.1, "{ct}");
    let key = key_bytes(&p, false) as f64 / MB;
    assert!((key - 84.9).abs() < 0.5, "{key}");
    assert!((key_bytes(&p, true) as f64 / MB - 42.5).abs() < 0.3);
}

#[test]
fn plan_counters_match_functional_key_switch() {
    let ctx = Context::new(SchemeParams {
        log_n: 10,
        levels: 11,
        dnum: 3,
        ..SchemeParams::desk()
    })
    .unwrap();
    let mut kg = KeyGenerator::new(&ctx, 3);
    let sk = kg.secret_key();
    let key = kg.relin_key(&sk);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for datapath in [Datapath::Modified, Datapath::Reference] {
        for limbs in [12, 9, 4, 1] {
            let mut a = uniform(&mut rng, ctx.ring(), &ctx.q_basis(limbs));
            a.rep = Representation::Evaluation;
            let mut c = OpCounters::default();
            key_switch(&ctx, &a, &key, datapath, &mut c).unwrap();
            let plan = KeySwitchPlan::new(ctx.n(), ctx.params().limb_bits, limbs, ctx.alpha(), datapath, false);
            assert_eq!(plan.counters(), c, "{datapath:?} limbs {limbs}");
        }
    }
}

#[test]
fn keyswitch_cost_properties() {
    let h = hw();
    let p = SchemeParams::fpga();
    let empty = KeySwitchPlan::new(p.n(), 54, 0, p.alpha(), Datapath::Modified, false);
    assert_eq!(keyswitch_cost(&empty, &h).total_cycles, 0);

    let m = KeySwitchPlan::new(p.n(), 54, p.q_limbs(), p.alpha(), Datapath::Modified, false);
    let r = KeySwitchPlan::new(p.n(), 54, p.q_limbs(), p.alpha(), Datapath::Reference, false);
    let (cm, cr) = (keyswitch_cost(&m, &h), keyswitch_cost(&r, &h));
    assert!(cm.total_cycles < cr.total_cycles);
    assert!(cm.hbm_bytes < cr.hbm_bytes);
    assert_eq!(cm.total_cycles, cm.sum_of_parts());

    // The 300-cycle key read is hidden behind each digit's compute.
    for d in &m.digits {
        let compute = h.ntt_cycles(p.n(), d.intt as usize)
            + h.ntt_cycles(p.n(), d.ntt as usize)
            + h.stream_cycles(d.conv_modmul + d.kskip_modmul);
        assert!(compute > h.hbm_cycles(d.key_bytes) + h.key_read_latency);
    }
    let slow = HardwareProfile {
        hbm_bytes_per_s: 10e9,
        ..h.clone()
    };
    assert!(keyswitch_cost(&m, &slow).total_cycles > cm.total_cycles);

    let hoisted = KeySwitchPlan::new(p.n(), 54, p.q_limbs(), p.alpha(), Datapath::Modified, true);
    assert!(keyswitch_cost(&hoisted, &h).total_cycles < cm.total_cycles);
}

#[test]
fn basic_ops_within_band() {
    let p = SchemeParams::fpga();
    for op in BasicOp::ALL {
        let t = estimate_op_time(op, &p, &hw());
        let r = reference_op_time(op);
        assert!(within_band(t, r), "{}: {t:e} vs {r:e}", op.name());
    }
}

#[test]
fn bootstrap_estimate_within_band_and_linear_in_slots() {
    let p = SchemeParams::fpga();
    let r = estimate_bootstrap(&p, 1 << 15, &EvalModShape::default(), &hw()).unwrap();
    let a = r.amortized_s.unwrap();
    assert!(within_band(a, REFERENCE_AMORTIZED_S), "{a:e}");
    assert_eq!(r.total_cycles, r.sum_of_parts());
    assert!(r.peak_onchip_bytes <= hw().onchip_total_bytes);

    let mults = [1e-3; 6];
    let one = amortized_mult_time(r.seconds, &mults, 6, 1 << 14).unwrap();
    let two = amortized_mult_time(r.seconds, &mults, 6, 1 << 15).unwrap();
    assert!((one / two - 2.0).abs() < 1e-12);
}

#[test]
fn fft_iter_sweep_has_interior_minimum() {
    let p = SchemeParams::fpga();
    let times: Vec<f64> = (1..=5)
        .map(|f| {
            let q = SchemeParams { fft_iter: f, ..p.clone() };
            estimate_bootstrap(&q, 1 << 15, &EvalModShape::default(), &hw())
                .unwrap()
                .amortized_s
                .unwrap()
        })
        .collect();
    let best = (0..5).min_by(|&i, &j| times[i].total_cmp(&times[j])).unwrap() + 1;
    assert!(best == 3 || best == 4, "{times:?}");
    assert!(times[0] > times[best - 1] && times[4] > times[best - 1]);
}

#[test]
fn lr_estimates_within_band() {
    let p = SchemeParams::fpga();
    let shape = LrCostShape::default();
    for (devices, reference) in REFERENCE_LR_S {
        let e = estimate_lr(devices, &p, &shape, &EvalModShape::default(), &hw()).unwrap();
        assert!(within_band(e.total_s, reference), "{devices}: {e:?}");
        let parts = e.bootstrap_s + e.parallel_s + e.shared_s + e.comm_s;
        assert!((parts - e.total_s).abs() < 1e-15);
    }
    let one = estimate_lr(1, &p, &shape, &EvalModShape::default(), &hw()).unwrap();
    let eight = estimate_lr(8, &p, &shape, &EvalModShape::default(), &hw()).unwrap();
    assert_eq!(one.comm_s, 0.0);
    assert_eq!(one.bootstrap_s, eight.bootstrap_s);
    assert!(eight.total_s > one.total_s / 8.0);
    // Two exchanges per iteration, each a three-round tree over eight boards.
    assert!(within_band(eight.comm_s, 12e-3), "{}", eight.comm_s);
    assert_eq!(comm_seconds(8, 2, &hw()), hw().seconds(6 * 546_980));
}

#[test]
fn explorer_rows() {
    let p = SchemeParams::fpga();
    let rows = explore_params(&p, 1728, &[1, 2, 3, 4, 5], &[4], 1 << 15, &EvalModShape::default(), &hw());
    let d3 = rows.iter().find(|r| r.dnum == 3).unwrap();
    assert!((d3.key_mb - 84.9).abs() < 0.5);
    assert!((d3.ct_mb - 28.3).abs() < 0.1);
    assert_eq!(d3.levels_after, 6);
    assert_eq!(d3.alpha, 8);
    assert!(d3.feasible && d3.amortized_us.is_some() && d3.ntt_count > 0);
    let d1 = &rows[0];
    assert!(!d1.feasible && d1.amortized_us.is_none());
    for w in rows.windows(2) {
        assert!(w[1].levels_after >= w[0].levels_after);
        assert!(w[1].key_mb > w[0].key_mb);
    }
    assert!(rows.last().unwrap().levels_after > rows[0].levels_after);
}

#[test]
fn max_levels_fill_the_budget() {
    assert_eq!(max_levels(1728, 54, 3), Some(23));
    assert_eq!(max_levels(1728, 54, 1), Some(15));
    assert_eq!(max_levels(1728, 54, 2), Some(20));
}

#[test]
fn residency_check() {
    let h = hw();
    let p = SchemeParams::fpga();
    let trace = basic_op_trace(BasicOp::Mult, &p, p.q_limbs(), Datapath::Modified);
    let ok = onchip_residency_check(&trace, &h, false);
    assert!(ok.pass && ok.peak_bytes <= 43_000_000, "{ok:?}");
    let naive = onchip_residency_check(&trace, &h, true);
    let keys_and_ct = key_bytes(&p, false) + ciphertext_bytes(p.n(), 54, p.raised_limbs());
    assert!(!naive.pass && naive.peak_bytes >= keys_and_ct, "{naive:?}");
    assert!(keys_and_ct as f64 / MB > 112.0);
    let empty = onchip_residency_check(&OpTrace::new(54), &h, false);
    assert!(empty.pass && empty.peak_bytes == 0);
}

#[test]
fn evaluator_trace_replays() {
    let ctx = Context::new(SchemeParams {
        log_n: 10,
        levels: 5,
        ..SchemeParams::desk()
    })
    .unwrap();
    let mut kg = KeyGenerator::new(&ctx, 4);
    let sk = kg.secret_key();
    let g = fab_core::ckks::galois_for_rotation(ctx.n(), 1);
    let keys = kg.eval_keys(&sk, &[g]);
    let run = || {
        let ev = Evaluator::new(&ctx, &keys);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let v = vec![Complex64::new(0.5, 0.0); 4];
        let pt = encode(&ctx, &v, ctx.params().scale, ctx.q_limbs()).unwrap();
        let ct = encrypt_sk(&ctx, &sk, &pt, &mut rng).unwrap();
        ev.start_trace();
        let m = ev.mul(&ct, &ct).unwrap();
        let r = ev.rotate(&m, 1).unwrap();
        ev.add(&r, &m).unwrap();
        ev.take_trace().unwrap()
    };
    let t = run();
    assert_eq!(t, run());
    let kinds: Vec<OpKind> = t.records.iter().map(|r| r.kind).collect();
    assert_eq!(
        kinds,
        vec![
            OpKind::Tensor,
            OpKind::KeySwitch,
            OpKind::Add,
            OpKind::Rescale,
            OpKind::Automorph,
            OpKind::KeySwitch,
            OpKind::AddPlain,
            OpKind::Add
        ]
    );
    assert_eq!(t.records[0].limbs, 6);
    assert_eq!(t.records[4].limbs, 5);
    let report = replay(&t, &hw());
    assert_eq!(report.total_cycles, report.sum_of_parts());
    assert!(report.to_string().contains("total_cycles="));
}

fn every_kind() -> impl Strategy<Value = OpKind> {
    prop::sample::select(OpKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cycles_monotone_in_limbs_and_degree(kind in every_kind(), limbs in 2usize..30, log_n in 10u32..16) {
        let h = hw();
        let rec = |l: usize, n: usize| TraceRecord { kind, limbs: l, n, alpha: 8, datapath: Datapath::Modified };
        let n = 1usize << log_n;
        let (base, _) = record_cycles(&rec(limbs, n), 54, &h);
        let (more_limbs, _) = record_cycles(&rec(limbs + 1, n), 54, &h);
        let (bigger, _) = record_cycles(&rec(limbs, 2 * n), 54, &h);
        prop_assert!(more_limbs >= base);
        prop_assert!(bigger > base);
    }
}
