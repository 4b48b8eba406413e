use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cocache::bounds::lp_bound;
use cocache::combinatorics::rat;
use cocache::delivery::simulate;
use cocache::{FieldMatrix, Gf256, Gf65536, Mode, SeedPath};
use cocache_bench::config;

fn field(c: &mut Criterion) {
    let mut rng = SeedPath::new(1).rng();
    let a = FieldMatrix::<Gf256>::random(64, 64, &mut rng);
    let b: Vec<u8> = (0..64).map(|i| i as u8).collect();
    c.bench_function("gf256 rank 64x64", |bch| bch.iter(|| black_box(&a).rank()));
    c.bench_function("gf256 solve 64x64", |bch| bch.iter(|| black_box(&a).solve(black_box(&b))));
    let w = FieldMatrix::<Gf65536>::random(64, 64, &mut rng);
    c.bench_function("gf65536 rank 64x64", |bch| bch.iter(|| black_box(&w).rank()));
}

fn delivery(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let example = config(2, 5, (4, 5), 1000, Mode::Centralized);
    g.bench_function("centralized N=2 K=5 F=1000", |bch| bch.iter(|| simulate(black_box(&example))));
    let larger = config(3, 8, (3, 2), 5600, Mode::Centralized);
    g.bench_function("centralized N=3 K=8 t=4", |bch| bch.iter(|| simulate(black_box(&larger))));
    let dec = config(4, 8, (6, 5), 20_000, Mode::Decentralized);
    g.bench_function("decentralized N=4 K=8 F=20000", |bch| bch.iter(|| simulate(black_box(&dec))));
    g.finish();
}

fn bounds(c: &mut Criterion) {
    let m = rat(7, 10);
    c.bench_function("lp_bound N=2 K=30", |bch| bch.iter(|| lp_bound(2, 30, black_box(&m))));
}

criterion_group!(benches, field, delivery, bounds);
criterion_main!(benches);
