use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hjj_bench::{abs_edge, abs_pair, fat_cross, mixed_triple};
use hjj_core::fatten::{GridFunction2D, Scheme2D};
use hjj_core::junction::{solve_junction_constructive, solve_junction_direct};
use hjj_core::viscous::{solve_viscous_kirchhoff, ViscousParams};
use hjj_core::edge::solve_edge;
use hjj_core::{NodeBc, SolverParams};

fn edge(c: &mut Criterion) {
    let params = SolverParams::default();
    let mut g = c.benchmark_group("edge");
    for n in [200, 800] {
        let (h, e) = abs_edge(n).unwrap();
        g.bench_with_input(BenchmarkId::new("state_constraint", n), &n, |b, _| {
            b.iter(|| solve_edge(black_box(&h), &e, NodeBc::StateConstraint, &params).unwrap())
        });
    }
    g.finish();
}

fn junction(c: &mut Criterion) {
    let params = SolverParams::default();
    let mut g = c.benchmark_group("junction");
    for n in [200, 400] {
        let p = mixed_triple(n).unwrap();
        g.bench_with_input(BenchmarkId::new("direct", n), &p, |b, p| {
            b.iter(|| solve_junction_direct(black_box(p), &params).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("constructive", n), &p, |b, p| {
            b.iter(|| solve_junction_constructive(black_box(p), &params).unwrap())
        });
    }
    g.finish();
}

fn viscous(c: &mut Criterion) {
    let p = abs_pair(400).unwrap();
    let mut g = c.benchmark_group("viscous");
    g.sample_size(20);
    for eps in [0.1, 0.025] {
        let params = ViscousParams::with_epsilon(eps);
        g.bench_with_input(BenchmarkId::new("kirchhoff", eps), &params, |b, params| {
            b.iter(|| solve_viscous_kirchhoff(black_box(&p), params).unwrap())
        });
    }
    g.finish();
}

fn fattened(c: &mut Criterion) {
    let (h, dom) = fat_cross(0.2, 0.025).unwrap();
    let scheme = Scheme2D::new(&h, dom.clone());
    let params = SolverParams::explicit();
    let mut g = c.benchmark_group("fattened");
    g.sample_size(10);
    g.bench_function("relax_eps_0.2", |b| {
        b.iter(|| {
            let init = GridFunction2D::constant(dom.clone(), scheme.subsolution_level());
            scheme.relax(black_box(init), &params)
        })
    });
    g.finish();
}

criterion_group!(benches, edge, junction, viscous, fattened);
criterion_main!(benches);
