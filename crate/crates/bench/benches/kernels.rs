use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use polytree::boundary::LocallyConstantFunction;
use polytree::extended::ExtendedContext;
use polytree::operators::{SampledFunction, VertexField};
use polytree::oracle::{first_passage_table, truncated_series, Backend};
use polytree::solvers::{frak_m_a, poisson_transform};
use polytree::spherical::KernelSpec;
use polytree::tree::parse_end;
use polytree::{Complex64, SpectralContext, Vertex};

fn ctx() -> SpectralContext {
    SpectralContext::new(3, Complex64::new(1.0, 1.0)).unwrap()
}

fn spectral(c: &mut Criterion) {
    c.bench_function("spectral_context", |b| {
        b.iter(|| SpectralContext::new(black_box(3), black_box(Complex64::new(1.0, 1.0))))
    });
}

fn polyspherical(c: &mut Criterion) {
    let mut group = c.benchmark_group("phi_n");
    for n in [0usize, 2, 4] {
        let spec = KernelSpec::new(ctx(), n).unwrap();
        group.bench_with_input(BenchmarkId::new("sum", n), &n, |b, _| {
            b.iter(|| spec.phi_n_scaled(black_box(200)))
        });
        let x: Vertex = "1.0.2.1.0.1.2.0.0.1.2.2.1.0.0.1.2.1.0.1".parse().unwrap();
        group.bench_with_input(BenchmarkId::new("descent", n), &n, |b, _| {
            b.iter(|| spec.phi_n_descent(black_box(&x)))
        });
    }
    group.finish();
}

fn transforms(c: &mut Criterion) {
    let z = ctx();
    let g = LocallyConstantFunction::parse("0 1 0\n1.2 -2 0.5\n3.0.1 0.25 1\n", 3).unwrap();
    let f = poisson_transform(&z, 2, g.clone()).unwrap();
    let xi = parse_end("1|2.0", 3).unwrap();
    let x = xi.ray_vertex(60);
    c.bench_function("poisson_transform_eval", |b| b.iter(|| f.eval_scaled(black_box(&x))));
    c.bench_function("frak_m_a", |b| {
        b.iter(|| frak_m_a(&z, 1, &g, black_box(&xi), 1, 30).unwrap())
    });
}

fn operators(c: &mut Criterion) {
    let z = ctx();
    let e = ExtendedContext::new(&z);
    let xi = parse_end("1|0.1", 3).unwrap();
    let n = 3;
    let f = SampledFunction::tube(3, &xi, 100, n, |x| e.extended_kernel(n, x, &xi).unwrap());
    c.bench_function("tube_lambda_minus_p_power_dd", |b| {
        b.iter(|| f.lambda_minus_p_power(&z, n).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    c.bench_function("first_passage_double_2000", |b| {
        b.iter(|| first_passage_table(2, 1, black_box(2000), Backend::Double).unwrap())
    });
    c.bench_function("first_passage_exact_100", |b| {
        b.iter(|| first_passage_table(3, 2, black_box(100), Backend::Exact).unwrap())
    });
    let t = first_passage_table(2, 3, 2000, Backend::Double).unwrap();
    c.bench_function("truncated_series", |b| {
        b.iter(|| truncated_series(&t, 3, black_box(Complex64::new(2.0, 0.0))).unwrap())
    });
}

criterion_group!(benches, spectral, polyspherical, transforms, operators, oracle);
criterion_main!(benches);
