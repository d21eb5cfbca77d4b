use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fab_core::ntt::{ntt_forward, ntt_inverse, TwiddleTable};
use fab_core::rns::{generate_modulus_chain, DEFAULT_SHIFTS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn ntt(c: &mut Criterion) {
    let mut g = c.benchmark_group("ntt");
    for (log_n, bits) in [(12u32, 54u32), (14, 30), (14, 54), (16, 54)] {
        let n = 1usize << log_n;
        let m = generate_modulus_chain(n, 1, bits, DEFAULT_SHIFTS).unwrap().remove(0);
        let tw = TwiddleTable::new(&m, n).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut a: Vec<u64> = (0..n).map(|_| rng.random_range(0..m.value())).collect();
        g.throughput(Throughput::Elements(1));
        let id = format!("2^{log_n}/{bits}bit");
        g.bench_function(BenchmarkId::new("forward", &id), |b| b.iter(|| ntt_forward(&mut a, &m, &tw).unwrap()));
        g.bench_function(BenchmarkId::new("inverse", &id), |b| b.iter(|| ntt_inverse(&mut a, &m, &tw).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, ntt);
criterion_main!(benches);
