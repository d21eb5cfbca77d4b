use fab_core::lr::*;
use fab_core::{Context, Error, SchemeParams};
use proptest::prelude::*;

#[test]
fn sigmoid_fit_coefficients() {
    let s = SigmoidPoly::least_squares(8.0);
    // Frozen from the fit itself; also the widely used degree-3 choice.
    assert!((s.a1 - 0.15012).abs() < 1e-5, "{}", s.a1);
    assert!((s.a3 + 0.0015930).abs() < 1e-6, "{}", s.a3);
    let worst = (-800..=800)
        .map(|i| i as f64 / 100.0)
        .map(|x| (s.eval(x) - 1.0 / (1.0 + (-x).exp())).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.12, "{worst}");
}

#[test]
fn nesterov_starts_without_momentum() {
    let cfg = LrConfig { iterations: 4, learning_rate: 2.0, ..Default::default() };
    let s = nesterov_schedule(&cfg);
    assert_eq!(s[0], (2.0, 0.0));
    assert!((s[1].1 + 0.2818).abs() < 1e-3);
    assert!(s.iter().skip(1).all(|&(_, eta)| eta < 0.0));
    assert!((s[3].0 - 0.5).abs() < 1e-12);
}

#[test]
fn synthetic_digits_shape_and_determinism() {
    let a = synthetic_digits(50, 3);
    assert_eq!(a.len(), 50);
    assert_eq!(a.dim(), FEATURES);
    a.validate(FEATURES).unwrap();
    assert!(a.features.iter().flatten().all(|&x| (0.0..=1.0).contains(&x)));
    assert_eq!(a, synthetic_digits(50, 3));
    assert_ne!(a, synthetic_digits(50, 4));
    let threes = a.labels.iter().filter(|&&y| y == 1).count();
    assert!(threes > 10 && threes < 40);
}

#[test]
fn pooling_averages_blocks() {
    let img: Vec<f64> = (0..16).map(|i| i as f64).collect();
    assert_eq!(avg_pool2(&img, 4), vec![2.5, 4.5, 10.5, 12.5]);
}

#[test]
fn csv_roundtrip_and_shape_errors() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synthetic_digits(5, 1);
    let path = dir.path().join("d.csv");
    ds.write_csv(&path).unwrap();
    assert_eq!(Dataset::load_csv(&path, FEATURES).unwrap(), ds);

    let header = dir.path().join("h.csv");
    let body = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&header, format!("label,{}\n{body}", (0..FEATURES).map(|i| format!("p{i}")).collect::<Vec<_>>().join(","))).unwrap();
    assert_eq!(Dataset::load_csv(&header, FEATURES).unwrap(), ds);

    let short = dir.path().join("s.csv");
    std::fs::write(&short, "1,0.5,0.25\n").unwrap();
    assert!(matches!(Dataset::load_csv(&short, FEATURES), Err(Error::Dataset(_))));
    let label = dir.path().join("l.csv");
    std::fs::write(&label, format!("3,{}\n", vec!["0"; FEATURES].join(","))).unwrap();
    assert!(matches!(Dataset::load_csv(&label, FEATURES), Err(Error::Dataset(_))));
    assert!(matches!(Dataset::load_csv(&dir.path().join("none.csv"), FEATURES), Err(Error::Io(_))));
}

#[test]
fn shadow_learns_synthetic_digits() {
    let ds = synthetic_digits(1000, 7);
    let (train, holdout) = ds.split(200).unwrap();
    let cfg = LrConfig { minibatch: 64, iterations: 10, ..Default::default() };
    let (states, range) = train_shadow(&cfg, &train).unwrap();
    let first = logistic_loss(&train, &states[0].weights(&cfg));
    let last = logistic_loss(&train, &states[9].weights(&cfg));
    assert!(last < first);
    assert!(accuracy(&holdout, &states[9].weights(&cfg)) > 0.9);
    assert!(range.max_abs_inner < cfg.sigmoid_bound);
    assert!(range.max_abs_weight < 1.0);
}

#[test]
fn config_rejects_bad_shapes() {
    let bad = LrConfig { features: 300, ..Default::default() };
    assert!(bad.validate().is_err());
    let bad = LrConfig { slots: 200, features: 100, ..Default::default() };
    assert!(bad.validate().is_err());
    let ds = synthetic_digits(4, 1);
    let cfg = LrConfig { features: 100, slots: 128, ..Default::default() };
    assert!(matches!(train_shadow(&cfg, &ds), Err(Error::Dataset(_))));
}

fn small_params(levels: usize) -> SchemeParams {
    SchemeParams {
        log_n: 10,
        levels,
        fft_iter: 2,
        ..SchemeParams::desk()
    }
}

#[test]
fn too_few_levels_is_an_underflow() {
    // Bootstrapping uses 13 levels here, leaving 6 limbs.
    let ctx = Context::new(small_params(18)).unwrap();
    let cfg = LrConfig { minibatch: 2, iterations: 1, ..Default::default() };
    match EncryptedTrainer::new(&ctx, cfg) {
        Err(Error::LevelUnderflow { needed: 7, available: 6 }) => {}
        Err(e) => panic!("{e}"),
        Ok(_) => panic!("expected underflow"),
    }
}

#[test]
fn encrypted_iterations_track_the_shadow() {
    let ctx = Context::new(small_params(19)).unwrap();
    let ds = synthetic_digits(60, 5);
    let (train, holdout) = ds.split(20).unwrap();
    let cfg = LrConfig { minibatch: 4, iterations: 2, devices: 2, ..Default::default() };
    let mut trainer = EncryptedTrainer::new(&ctx, cfg).unwrap();
    let report = trainer.train(&train, &holdout).unwrap();
    assert_eq!(report.log.len(), 2);
    for l in &report.log {
        assert_eq!(l.levels_consumed, LEVELS_PER_ITERATION);
        assert_eq!((l.start_limbs, l.end_limbs), (7, 2));
        assert!(l.max_weight_error < 5e-3, "{l:?}");
        assert!((l.encrypted_loss - l.shadow_loss).abs() < 1e-2);
        assert!(l.comm_s > 0.0);
    }
    assert_eq!(report.total_depth, 10);
    assert!(report.agreement >= 0.95);
}

proptest! {
    #[test]
    fn minibatches_cover_the_training_set(t in 0usize..50, m in 1usize..40, n in 1usize..100) {
        let rows = minibatch_rows(t, m, n);
        prop_assert_eq!(rows.len(), m.min(n));
        prop_assert!(rows.iter().all(|&r| r < n));
        let mut sorted = rows.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), rows.len());
    }

    #[test]
    fn rotation_sum_steps_double(log in 1u32..12) {
        let steps: Vec<usize> = rotation_steps(1 << log).collect();
        prop_assert_eq!(steps.len(), log as usize);
        prop_assert_eq!(steps.iter().sum::<usize>(), (1 << log) - 1);
    }
}

#[test]
fn weights_beyond_the_bound_are_rejected_before_training() {
    let ctx = Context::new(small_params(19)).unwrap();
    let ds = synthetic_digits(40, 5);
    let (train, holdout) = ds.split(10).unwrap();
    let cfg = LrConfig { minibatch: 8, iterations: 3, weight_bound: 0.01, ..Default::default() };
    let mut trainer = EncryptedTrainer::new(&ctx, cfg).unwrap();
    assert!(matches!(trainer.train(&train, &holdout), Err(Error::InvalidParams(_))));
    let wrong = Dataset { features: vec![vec![0.0; 10]], labels: vec![1] };
    assert!(matches!(trainer.train(&wrong, &holdout), Err(Error::Dataset(_))));
}
