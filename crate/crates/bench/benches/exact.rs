use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use correq::constructions::canonical_game;
use correq::improve::{optimize_objective, ObjectiveWeights};
use correq::nash::fit_utilities;
use correq::polytope::tangent_space;
use correq::{rank, ProductDist, Rational, RationalMatrix, Support};

fn patterned(rows: usize, cols: usize) -> RationalMatrix {
    let data: Vec<Vec<Rational>> = (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| Rational::new(((i * 7 + j * 13 + i * j) % 11) as i64 - 5, (j % 3 + 1) as i64))
                .collect()
        })
        .collect();
    RationalMatrix::from_rows(data, cols).expect("rectangular")
}

fn bench_rank(c: &mut Criterion) {
    let m = patterned(40, 60);
    c.bench_function("rank 40x60", |b| b.iter(|| rank(black_box(&m))));
}

fn bench_lp(c: &mut Criterion) {
    let counts = [3, 3, 3];
    let s = Support::new(vec![vec![0, 1]; 3], &counts).unwrap();
    let nu = ProductDist::uniform_on(&s, &counts);
    let g = fit_utilities(&s, &nu, 3, &counts).unwrap();
    let w = ObjectiveWeights::welfare(&g);
    c.bench_function("welfare lp 3x3x3", |b| b.iter(|| optimize_objective(black_box(&g), &w).unwrap()));
}

fn bench_tangent(c: &mut Criterion) {
    let cg = canonical_game(&[2; 12]).unwrap();
    let nu = ProductDist::uniform(cg.game.action_counts());
    let mut group = c.benchmark_group("tangent");
    group.sample_size(10);
    group.bench_function("prediction game n=12", |b| {
        b.iter(|| tangent_space(black_box(&cg.game), &nu).unwrap().dim())
    });
    group.finish();
}

criterion_group!(benches, bench_rank, bench_lp, bench_tangent);
criterion_main!(benches);
