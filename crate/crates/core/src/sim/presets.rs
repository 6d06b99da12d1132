//! Built-in scenario and policy sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::idm::{IdmParams, LeadProfile};
use crate::sim::policy::{EgoPolicy, PolicyKind};
use crate::sim::scenario::{MergeResistance, PlatoonSpec, ScenarioKind, ScenarioSpec};
use crate::traj::{DEFAULT_DT, DEFAULT_SENSING_RANGE, DEFAULT_VEHICLE_LENGTH};

pub const PAPER_DESK: &str = "paper-desk";
pub const PRESET_NAMES: &[&str] = &[PAPER_DESK];

/// Runs per event in the full desk study.
pub const DESK_RUNS: usize = 43;

struct EventShape {
    kind: ScenarioKind,
    speed_limit: f64,
    /// Distance from the ego spawn point to the constraint, m.
    approach: f64,
    lead_base: f64,
    size: usize,
    /// Where gap 0 sits, relative to the constraint, when a full-speed ego
    /// gets there. Negative means before the constraint.
    front_offset: f64,
    ego_start_speed: f64,
}

const DESK_EVENTS: [EventShape; 10] = [
    EventShape { kind: ScenarioKind::Incident, speed_limit: 22.22, approach: 420.0, lead_base: 8.0, size: 9, front_offset: -120.0, ego_start_speed: 20.0 },
    EventShape { kind: ScenarioKind::Incident, speed_limit: 22.22, approach: 400.0, lead_base: 7.5, size: 10, front_offset: -110.0, ego_start_speed: 20.0 },
    EventShape { kind: ScenarioKind::Incident, speed_limit: 22.22, approach: 450.0, lead_base: 9.5, size: 8, front_offset: -130.0, ego_start_speed: 19.0 },
    EventShape { kind: ScenarioKind::Incident, speed_limit: 22.22, approach: 430.0, lead_base: 7.0, size: 11, front_offset: -115.0, ego_start_speed: 21.0 },
    EventShape { kind: ScenarioKind::OffRamp, speed_limit: 25.0, approach: 460.0, lead_base: 10.0, size: 9, front_offset: -125.0, ego_start_speed: 23.0 },
    EventShape { kind: ScenarioKind::OffRamp, speed_limit: 25.0, approach: 440.0, lead_base: 8.5, size: 10, front_offset: -110.0, ego_start_speed: 22.0 },
    EventShape { kind: ScenarioKind::OffRamp, speed_limit: 25.0, approach: 480.0, lead_base: 11.0, size: 8, front_offset: -135.0, ego_start_speed: 24.0 },
    EventShape { kind: ScenarioKind::OnRamp, speed_limit: 22.22, approach: 380.0, lead_base: 7.5, size: 9, front_offset: -115.0, ego_start_speed: 14.0 },
    EventShape { kind: ScenarioKind::OnRamp, speed_limit: 22.22, approach: 360.0, lead_base: 7.0, size: 10, front_offset: -105.0, ego_start_speed: 12.0 },
    EventShape { kind: ScenarioKind::OnRamp, speed_limit: 22.22, approach: 400.0, lead_base: 9.0, size: 9, front_offset: -120.0, ego_start_speed: 15.0 },
];

fn build_spec(index: usize, shape: &EventShape) -> ScenarioSpec {
    let constraint_s = shape.approach;
    let lead = LeadProfile {
        base_speed: shape.lead_base,
        amplitude: 1.5,
        period: 40.0,
    };
    // Place the leader so that gap 0 is comfortably reachable by a driver
    // cruising a little under the limit; slower drivers fall back to later gaps.
    let gap0_s = constraint_s + shape.front_offset;
    let cruise = 0.85 * shape.speed_limit;
    let ramp_up = (cruise - shape.ego_start_speed).max(0.0) / 2.0;
    let arrival = (gap0_s + ramp_up * ramp_up / 2.0) / cruise + 3.0;
    let leader_start_s = gap0_s + DEFAULT_VEHICLE_LENGTH + 8.0 - shape.lead_base * arrival;
    // Keep the lane end outside sensing range at the window start so the
    // metric does not see it pop into view mid-window.
    let window_start_s = (constraint_s - DEFAULT_SENSING_RANGE + 20.0).max(40.0);
    ScenarioSpec {
        event_id: format!("E{:02}", index + 1),
        kind: shape.kind,
        speed_limit: shape.speed_limit,
        ego_lane: 1,
        target_lane: 0,
        constraint_s,
        window_start_s,
        window_end_s: constraint_s + 100.0,
        ego_start_s: 0.0,
        ego_start_speed: shape.ego_start_speed,
        platoon: PlatoonSpec {
            size: shape.size,
            leader_start_s,
            lead,
            idm: IdmParams {
                desired_speed: 16.0,
                ..IdmParams::default()
            },
            headway_range: [1.0, 2.0],
        },
        resistance: MergeResistance::default(),
        platoon_seed: 1000 + index as u64,
        dt: DEFAULT_DT,
        vehicle_length: DEFAULT_VEHICLE_LENGTH,
        max_duration: 600.0,
    }
}

/// The ten desk-study events: four incidents, three off-ramp diverges and
/// three on-ramp merges.
pub fn desk_scenarios() -> Vec<ScenarioSpec> {
    DESK_EVENTS.iter().enumerate().map(|(i, s)| build_spec(i, s)).collect()
}

/// Deterministic mix of driver types with jittered parameters. The same
/// `(count, seed)` always yields the same list, and a shorter list is a
/// prefix of a longer one.
pub fn policy_family(count: usize, seed: u64) -> Vec<EgoPolicy> {
    const PATTERN: [PolicyKind; 20] = {
        use PolicyKind::*;
        [
            LateMerge, TargetGap, EarlyMerge, TargetGap, Hesitant, LateMerge, TargetGap, EarlyMerge, TargetGap,
            LateMerge, Hesitant, TargetGap, EarlyMerge, LateMerge, TargetGap, TargetGap, Hesitant, EarlyMerge,
            LateMerge, TargetGap,
        ]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let kind = PATTERN[i % PATTERN.len()];
            let (speed, margin, accept) = match kind {
                PolicyKind::LateMerge => ((0.85, 1.0), (8.0, 25.0), (1.5, 2.5)),
                PolicyKind::TargetGap => ((0.7, 1.0), (15.0, 60.0), (1.8, 3.5)),
                PolicyKind::EarlyMerge => ((0.7, 0.95), (40.0, 120.0), (2.5, 4.0)),
                PolicyKind::Hesitant => ((0.55, 0.75), (60.0, 150.0), (3.5, 5.5)),
            };
            let mut draw = |(lo, hi): (f64, f64)| rng.gen_range(lo..hi);
            let speed_factor = draw(speed);
            let commit_margin = draw(margin);
            let gap_acceptance = draw(accept);
            let headway = draw((0.9, 1.8));
            let target_gap = rng.gen_range(1..=6);
            EgoPolicy {
                kind,
                speed_factor,
                target_gap,
                commit_margin,
                gap_acceptance,
                commit_delay: 2.0,
                headway,
            }
        })
        .collect()
}

/// Scenarios and policies of a named preset, optionally truncated.
pub fn preset(name: &str, events: Option<usize>, runs: Option<usize>) -> Result<(Vec<ScenarioSpec>, Vec<EgoPolicy>)> {
    match name {
        PAPER_DESK => {
            let mut specs = desk_scenarios();
            if let Some(n) = events {
                if n == 0 || n > specs.len() {
                    return Err(Error::Config(format!(
                        "preset {name} has {} events; cannot select {n}",
                        specs.len()
                    )));
                }
                specs.truncate(n);
            }
            let policies = policy_family(runs.unwrap_or(DESK_RUNS), 7);
            Ok((specs, policies))
        }
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
