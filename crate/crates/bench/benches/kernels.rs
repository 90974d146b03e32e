use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plate_tone::bessel::{bessel_j, ratio_j, root_h, zero_j};
use plate_tone::fd_oracle::{solve_clamped, solve_twoball};
use plate_tone::rearrange::{build_f, build_v, rearrange, Side};
use plate_tone::twoball::first_root_h_of_a;
use plate_tone::{Order, RadialMesh, SpectralParams, TwoBallInstance};
use plate_tone_bench::{extremal_laplacian, scrambled_profile};

fn bessel(c: &mut Criterion) {
    let nu = Order::new(0.25).unwrap();
    let mut g = c.benchmark_group("bessel");
    for s in [0.5, 6.0, 40.0] {
        g.bench_with_input(BenchmarkId::new("j", s), &s, |b, &s| {
            b.iter(|| bessel_j(nu, black_box(s)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("ratio_j", s), &s, |b, &s| {
            b.iter(|| ratio_j(nu, black_box(s)).unwrap())
        });
    }
    g.bench_function("zero_j_5", |b| b.iter(|| zero_j(black_box(nu), 5).unwrap()));
    g.bench_function("root_h", |b| b.iter(|| root_h(black_box(nu)).unwrap()));
    g.finish();
}

fn twoball_root(c: &mut Criterion) {
    let p = SpectralParams::new(2.5).unwrap();
    let mut g = c.benchmark_group("h_of_a");
    for a in [0.05, 0.4, 0.7] {
        let inst = TwoBallInstance::new(p, a).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(a), &inst, |b, inst| {
            b.iter(|| first_root_h_of_a(black_box(inst)).unwrap())
        });
    }
    g.finish();
}

fn fd_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("fd");
    g.sample_size(10);
    for n in [128, 512] {
        let mesh = RadialMesh::ball(2.0, 1.0, n).unwrap();
        g.bench_with_input(BenchmarkId::new("ball", n), &mesh, |b, m| {
            b.iter(|| solve_clamped(black_box(m)).unwrap())
        });
    }
    let p = SpectralParams::new(2.0).unwrap();
    let inst = TwoBallInstance::new(p, 0.4).unwrap();
    g.bench_function("twoball_256", |b| {
        b.iter(|| solve_twoball(&p, inst.a, inst.b, black_box(256)).unwrap())
    });
    g.finish();
}

fn rearrangement(c: &mut Criterion) {
    let p = SpectralParams::new(2.0).unwrap();
    let mut g = c.benchmark_group("rearrange");
    for len in [1_000, 100_000] {
        let prof = scrambled_profile(len).unwrap();
        g.bench_with_input(BenchmarkId::new("sort", len), &prof, |b, prof| {
            b.iter(|| rearrange(black_box(prof), &p))
        });
    }
    let du = extremal_laplacian(2.0, 1000).unwrap();
    let m = du.total_mass();
    let plus = rearrange(&du.positive_part(), &p);
    let minus = rearrange(&du.negative_part(), &p);
    g.bench_function("build_f_v_1000", |b| {
        b.iter(|| {
            let f = build_f(Side::Plus, &plus, &minus, m).unwrap();
            build_v(&f, (0.4 * m / p.omega_n).sqrt(), &p).unwrap()
        })
    });
    g.finish();
}

criterion_group!(kernels, bessel, twoball_root, fd_solve, rearrangement);
criterion_main!(kernels);
