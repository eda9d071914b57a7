use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use xyff_bench::fixture;
use xyff_core::bethe::find_all_roots;
use xyff_core::formfactor::{local_ff, transversal_ff_quadratic, SiteRange};
use xyff_core::{assemble_ff_generic, Axis, Kind, ModularParameter, Oracle, Route, C64};

fn theta(c: &mut Criterion) {
    let t = ModularParameter::new(C64::new(0.3, 0.7)).unwrap();
    let u = C64::new(0.37, 0.21);
    c.bench_function("theta/all-four", |b| b.iter(|| Kind::ALL.map(|k| t.theta(k, black_box(u)))));
}

fn roots(c: &mut Criterion) {
    let mut g = c.benchmark_group("roots");
    for n in [4usize, 6, 8] {
        let f = fixture(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &f.model, |b, m| b.iter(|| find_all_roots(0, m).unwrap()));
    }
    g.finish();
}

fn form_factors(c: &mut Criterion) {
    let mut g = c.benchmark_group("form-factor");
    for n in [4usize, 6] {
        let f = fixture(n);
        let (v, u) = (&f.sector0[0], &f.sector1[0]);
        g.bench_function(BenchmarkId::new("generic-assembly", n), |b| {
            b.iter(|| assemble_ff_generic(Axis::X, 0, 1, &v.roots, &u.roots, 2, &f.gauge, &f.model).unwrap())
        });
        g.bench_function(BenchmarkId::new("closed-form", n), |b| {
            b.iter(|| local_ff(Axis::X, v, u, 2, &f.gauge, Route::ClosedForm, &f.model).unwrap())
        });
        g.bench_function(BenchmarkId::new("closed-quadratic", n), |b| {
            b.iter(|| {
                transversal_ff_quadratic(Axis::X, 0, 1, &v.roots, &u.roots, 1, n, SiteRange::Outer, &f.model).unwrap()
            })
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    for n in [4usize, 6] {
        let f = fixture(n);
        let states: Vec<_> = f.sector0.iter().chain(&f.sector1).cloned().collect();
        g.bench_function(BenchmarkId::new("diagonalize-and-match", n), |b| {
            b.iter(|| Oracle::new(&f.model).unwrap().diagonalize_and_match(&states).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, theta, roots, form_factors, oracle);
criterion_main!(benches);
