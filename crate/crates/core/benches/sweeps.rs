//! Sequential against rayon for the embarrassingly parallel parts: parameter
//! sweeps, the embedding multi-start and trap inversion over a time series.
//!
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ptfourwell::acceptance::round_trip_error;
use ptfourwell::config::{parse_entries, TrapConfig};
use ptfourwell::init::{embed_pt_state_with, two_mode_stationary_middle, EmbeddingSpec};
use ptfourwell::par::Execution;
use ptfourwell::physical_map::{invert_series, OuterTargets};
use ptfourwell::scenario::{run_sweep, Sweep, TrapModel};

const MODES: [(&str, Execution); 2] = [("seq", Execution::Sequential), ("par", Execution::Parallel)];

fn config() -> Criterion {
    Criterion::default()
        .sample_size(10)
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(5))
}

fn sweep(c: &mut Criterion) {
    let entries = parse_entries("scenario = stationary\ngamma = 0.5\nj12 = 1\nt_end = 2\n").unwrap();
    let sweep: Sweep = "gamma=0.1:0.8:8".parse().unwrap();
    let mut group = c.benchmark_group("sweep");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, sweep.values.len()), &exec, |b, &exec| {
            b.iter(|| {
                let runs = run_sweep(black_box(&entries), &sweep, None, exec);
                assert!(runs.iter().all(|(_, r)| r.is_ok()));
            })
        });
    }
    group.finish();
}

fn embedding(c: &mut Criterion) {
    let spec = EmbeddingSpec {
        middle: two_mode_stationary_middle(1.0, 0.5).unwrap(),
        n0: 6.0,
        n3: 6.0,
        gamma: 0.5,
        j12: 1.0,
        d: None,
    };
    let mut group = c.benchmark_group("embedding");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 64), &exec, |b, &exec| {
            b.iter(|| embed_pt_state_with(black_box(&spec), exec).unwrap())
        });
    }
    group.finish();
}

fn inversion(c: &mut Criterion) {
    let model = TrapModel::new(&TrapConfig::default()).unwrap();
    let e = model.elements;
    // outer wells drifting by a few percent, as along a ramp
    let targets: Vec<OuterTargets> = (0..256)
        .map(|k| {
            let s = 0.05 * k as f64 / 255.0;
            OuterTargets {
                e0: e.e[0] * (1.0 - s),
                e3: e.e[3] * (1.0 + s),
                j01: e.j[0] * (1.0 + s),
                j23: e.j[2] * (1.0 - s),
            }
        })
        .collect();
    let mut group = c.benchmark_group("inversion");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, targets.len()), &exec, |b, &exec| {
            b.iter(|| {
                let out = invert_series(black_box(&targets), &model.trap, model.ansatz.widths, exec);
                assert!(out.iter().all(|r| r.is_ok()));
            })
        });
    }
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(format!("round_trip_{name}"), 32), &exec, |b, &exec| {
            b.iter(|| round_trip_error(&model, 32, 7, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = config();
    targets = sweep, embedding, inversion
}
criterion_main!(benches);
