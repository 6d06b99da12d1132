//! Fixtures shared by the benchmarks in `benches/`.

use pass_core::calibration::EventTraces;
use pass_core::pipeline::{evaluate_all, recordings};
use pass_core::sim::generate_cohort;
use pass_core::sim::presets::{desk_scenarios, policy_family};
use pass_core::traj::window_ticks;
use pass_core::{build_snapshots, EvalConfig, LaneContext, SceneSnapshot, VehicleTrack};

/// Ego lane with a slow leader, neighbor lane with a faster one further ahead.
pub fn two_lane_snapshot() -> SceneSnapshot {
    SceneSnapshot {
        time: 0.0,
        ego_speed: 15.0,
        ego_lane: 1,
        lanes: vec![LaneContext::with_leader(1, 8.0, 40.0), LaneContext::with_leader(0, 12.0, 90.0)],
        speed_limit: 22.22,
    }
}

/// Window snapshots of the first run of the first desk event.
pub fn desk_run() -> Vec<SceneSnapshot> {
    let data = generate_cohort(&desk_scenarios()[..1], &policy_family(2, 7), 42).expect("desk cohort");
    let event = &data.events[0];
    let run = &event.runs[0];
    let ticks = window_ticks(&run.ego, &event.window).expect("completed run");
    let ego = VehicleTrack::new(run.ego.id(), run.ego.records()[ticks].to_vec()).expect("valid track");
    build_snapshots(&ego, &run.others, &event.obstacles, &event.route, &EvalConfig::default().scene)
        .expect("snapshots")
}

/// Coefficient-free traces of a truncated desk cohort.
pub fn desk_traces(events: usize, runs: usize) -> Vec<EventTraces> {
    let data = generate_cohort(&desk_scenarios()[..events], &policy_family(runs, 7), 42).expect("desk cohort");
    evaluate_all(&recordings(&data), &EvalConfig::default())
        .expect("evaluation")
        .iter()
        .map(|r| r.traces())
        .collect()
}
