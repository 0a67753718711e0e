use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use girs_core::graphene::kubo_conductivity;
use girs_core::optimize::{grid_search, DesignObjective, ParameterBox, ParameterRange};
use girs_core::sweep::{run_preset, DEFAULT_DENSITY};
use girs_core::{reflect, DesignParameter, Execution, Preset, Scenario};

fn point(c: &mut Criterion) {
    let s = Scenario::default();
    c.bench_function("kubo_conductivity", |b| {
        b.iter(|| {
            kubo_conductivity(
                &s.options.constants,
                black_box(&s.graphene),
                black_box(s.drive.frequency),
            )
        })
    });
    c.bench_function("reflect", |b| {
        b.iter(|| {
            reflect(
                &s.options,
                black_box(&s.graphene),
                &s.geometry,
                black_box(&s.drive),
                None,
            )
        })
    });
}

fn sweeps(c: &mut Criterion) {
    let base = Scenario::default();
    let mut group = c.benchmark_group("fig3");
    group.bench_function("serial", |b| {
        b.iter(|| run_preset(Preset::Fig3, &base, DEFAULT_DENSITY, Execution::Serial).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_preset(Preset::Fig3, &base, DEFAULT_DENSITY, Execution::Parallel).unwrap())
    });
    group.finish();
}

fn search(c: &mut Criterion) {
    let bx = ParameterBox {
        ranges: vec![
            ParameterRange {
                parameter: DesignParameter::FermiLevel,
                min: 0.05,
                max: 2.5,
                steps: 50,
            },
            ParameterRange {
                parameter: DesignParameter::PatchWidth,
                min: 10.0,
                max: 25.0,
                steps: 20,
            },
        ],
        baseline: Scenario::default(),
    };
    c.bench_function("grid_search_50x20", |b| {
        b.iter(|| grid_search(&bx, &DesignObjective::MaximizeRa, Execution::Parallel).unwrap())
    });
}

criterion_group!(benches, point, sweeps, search);
criterion_main!(benches);
