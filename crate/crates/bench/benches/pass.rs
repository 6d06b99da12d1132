use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use pass_bench::{desk_run, desk_traces, two_lane_snapshot};
use pass_core::calibration::{grid_search, GridSpec};
use pass_core::sim::presets::{desk_scenarios, policy_family};
use pass_core::sim::run_event;
use pass_core::{evaluate_series, v_proj_multi, PassConfig};

fn bench_projection(c: &mut Criterion) {
    let cfg = PassConfig::default();
    let snap = two_lane_snapshot();
    c.bench_function("v_proj_multi/two_lanes", |b| b.iter(|| v_proj_multi(black_box(&snap), &cfg).unwrap()));
}

fn bench_series(c: &mut Criterion) {
    let cfg = PassConfig::default();
    let snaps = desk_run();
    c.bench_function(&format!("evaluate_series/{}_ticks", snaps.len()), |b| {
        b.iter(|| evaluate_series(black_box(&snaps), &cfg).unwrap())
    });
}

fn bench_grid(c: &mut Criterion) {
    let traces = desk_traces(3, 10);
    let spec = GridSpec::default();
    let mut group = c.benchmark_group("grid_search");
    group.sample_size(10);
    group.bench_function("100x100/3_events_x_10_runs", |b| b.iter(|| grid_search(black_box(&traces), &spec).unwrap()));
    group.finish();
}

fn bench_sim(c: &mut Criterion) {
    let spec = desk_scenarios().remove(0);
    let policy = policy_family(1, 7).remove(0);
    let mut group = c.benchmark_group("run_event");
    group.sample_size(10);
    group.bench_function("desk_incident", |b| {
        b.iter_batched(|| policy.clone(), |p| run_event(&spec, &p, "R", 1).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, bench_projection, bench_series, bench_grid, bench_sim);
criterion_main!(benches);
