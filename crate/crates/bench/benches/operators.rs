use std::f64::consts::TAU;
use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use densman::connections::{d_tensor, k_tensor, ConnectionSpec};
use densman::{
    integrate_geodesic, Density, LaplacianStyle, MuLaplacian, Otto, RegularMetric, SeededRng, Space,
    TangentVector,
};

fn setup(n: usize, style: LaplacianStyle) -> (Density, TangentVector, TangentVector) {
    let space = Space::cycle(n, TAU, style).unwrap();
    let mut r = SeededRng::new(7);
    let mu = r.density(&space).unwrap();
    let a = r.tangent(&mu).unwrap();
    let b = r.tangent(&mu).unwrap();
    (mu, a, b)
}

fn laplacian_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian_solve");
    for (n, style) in [
        (64, LaplacianStyle::Variational),
        (512, LaplacianStyle::Variational),
        (2048, LaplacianStyle::Variational),
        (2048, LaplacianStyle::Compositional),
    ] {
        let (mu, _, _) = setup(n, style);
        let f = SeededRng::new(3).gaussian_field(mu.space());
        let rhs = MuLaplacian::new(&mu).apply(&f);
        group.bench_with_input(BenchmarkId::new(format!("{style:?}"), n), &n, |bch, _| {
            // fresh operator each time: factorization is part of the cost
            bch.iter(|| MuLaplacian::new(&mu).solve(black_box(&rhs)).unwrap())
        });
    }
    group.finish();
}

fn tensors(c: &mut Criterion) {
    let mut group = c.benchmark_group("otto_tensors");
    for n in [32, 128] {
        let (mu, a, b) = setup(n, LaplacianStyle::Variational);
        group.bench_with_input(BenchmarkId::new("k_tensor", n), &n, |bch, _| {
            bch.iter(|| {
                let g = Otto::default().at(&mu).unwrap();
                k_tensor(&*g, black_box(&a), black_box(&b)).unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("d_tensor", n), &n, |bch, _| {
            bch.iter(|| {
                let g = Otto::default().at(&mu).unwrap();
                d_tensor(&*g, black_box(&a), black_box(&b)).unwrap()
            })
        });
    }
    group.finish();
}

fn geodesic(c: &mut Criterion) {
    let (mu, a, _) = setup(32, LaplacianStyle::Variational);
    let v = a.scaled(0.2 / a.sup_ratio(&mu));
    let model: Arc<dyn RegularMetric> = Arc::new(Otto::default());
    let spec = ConnectionSpec::alpha(model, 0.0);
    c.bench_function("geodesic_otto_alpha0_n32_100_steps", |bch| {
        bch.iter(|| integrate_geodesic(&spec, &mu, black_box(&v), 0.5, 100).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = laplacian_solve, tensors, geodesic
}
criterion_main!(benches);
