use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use std::time::Duration;

use epcag::analysis::{verify_hyperbolic_transfer, CertifyOptions};
use epcag::linear::validate_envelope_with;
use epcag::scenario::{self, Mode};
use epcag::system::{residual_defect_with, solve_bounded, SolveOptions};
use epcag::Exec;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn envelope(c: &mut Criterion) {
    let a = scenario::example4_matrix();
    let env = scenario::example4_envelope();
    let mut g = c.benchmark_group("envelope_validation");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| validate_envelope_with(&a, &env, black_box(1e-3), exec).unwrap()));
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let sys = scenario::example4_system(Mode::Homoclinic, -80, 30).unwrap();
    let mut g = c.benchmark_group("solve_bounded");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    for window in [5i64, 20] {
        for (name, exec) in POLICIES {
            let opts = SolveOptions { exec, ..Default::default() };
            g.bench_with_input(BenchmarkId::new(name, window), &window, |b, &w| {
                b.iter(|| solve_bounded(&sys, -w, w, &opts).unwrap())
            });
        }
    }
    g.finish();

    let t = solve_bounded(&sys, -20, 20, &SolveOptions::default()).unwrap();
    let mut g = c.benchmark_group("residual_defect");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| residual_defect_with(&sys, &t, exec).unwrap()));
    }
    g.finish();
}

fn catalog(c: &mut Criterion) {
    let catalog = scenario::example4_catalog(-80, 30).unwrap();
    let template = scenario::example4_system_with(catalog[0].alpha.clone()).unwrap();
    let mut g = c.benchmark_group("hyperbolic_catalog");
    g.sample_size(10).measurement_time(Duration::from_secs(60));
    for (name, exec) in POLICIES {
        let mut opts = CertifyOptions::default();
        opts.solve.exec = exec;
        g.bench_function(name, |b| b.iter(|| verify_hyperbolic_transfer(&template, &catalog, &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, envelope, solve, catalog);
criterion_main!(benches);
