use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fab_core::ckks::{sampling, KeyGenerator};
use fab_core::keyswitch::{key_switch, Datapath, OpCounters};
use fab_core::poly::Representation;
use fab_core::{Context, SchemeParams};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn keyswitch(c: &mut Criterion) {
    let params = SchemeParams {
        log_n: 12,
        levels: 11,
        dnum: 3,
        ..SchemeParams::desk()
    };
    let ctx = Context::new(params).unwrap();
    let mut kg = KeyGenerator::new(&ctx, 1);
    let sk = kg.secret_key();
    let key = kg.relin_key(&sk);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut g = c.benchmark_group("keyswitch");
    g.sample_size(20);
    for limbs in [12usize, 6] {
        let mut a = sampling::uniform(&mut rng, ctx.ring(), &ctx.q_basis(limbs));
        a.rep = Representation::Evaluation;
        for dp in [Datapath::Modified, Datapath::Reference] {
            g.bench_function(BenchmarkId::new(format!("{dp:?}"), format!("N=2^12/{limbs}limbs")), |b| {
                b.iter(|| {
                    let mut counters = OpCounters::default();
                    key_switch(&ctx, &a, &key, dp, &mut counters).unwrap()
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, keyswitch);
criterion_main!(benches);
