use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::policy::EgoPolicy;
use crate::sim::scenario::ScenarioSpec;
use crate::sim::world::{run_event, MergeStats};
use crate::traj::{EventWindow, Obstacle, RouteMeta, VehicleTrack};

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run_id: String,
    pub policy: EgoPolicy,
    pub seed: u64,
    pub ego: VehicleTrack,
    pub others: Vec<VehicleTrack>,
    pub completed: bool,
    pub stats: MergeStats,
}

#[derive(Debug, Clone)]
pub struct EventData {
    pub spec: ScenarioSpec,
    pub window: EventWindow,
    pub route: RouteMeta,
    pub obstacles: Vec<Obstacle>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub events: Vec<EventData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub policy: EgoPolicy,
    pub seed: u64,
    pub completed: bool,
    pub stats: MergeStats,
}

impl RunRecord {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            run_id: self.run_id.clone(),
            policy: self.policy.clone(),
            seed: self.seed,
            completed: self.completed,
            stats: self.stats,
        }
    }
}

/// FNV-1a over the serialized policy: a stable fingerprint so the per-run
/// random stream follows the policy, not its position in the list.
fn fingerprint(policy: &EgoPolicy) -> u64 {
    let text = serde_json::to_string(policy).expect("policy serializes");
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Per-run seed derived from the cohort seed, the event and the policy.
pub fn run_seed(cohort_seed: u64, spec: &ScenarioSpec, policy: &EgoPolicy) -> u64 {
    let mut x = cohort_seed ^ spec.platoon_seed.rotate_left(17) ^ fingerprint(policy).rotate_left(41);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn run_id(event_id: &str, index: usize) -> String {
    format!("{event_id}-R{:02}", index + 1)
}

/// Runs every policy through every scenario. Runs are independent and
/// executed in parallel; the result does not depend on thread scheduling.
pub fn generate_cohort(specs: &[ScenarioSpec], policies: &[EgoPolicy], seed: u64) -> Result<Dataset> {
    if policies.len() < 2 {
        return Err(Error::Config(format!(
            "a cohort needs at least two policies, got {}",
            policies.len()
        )));
    }
    for (i, spec) in specs.iter().enumerate() {
        spec.validate()?;
        if specs[..i].iter().any(|s| s.event_id == spec.event_id) {
            return Err(Error::Config(format!("duplicate event id {}", spec.event_id)));
        }
    }
    for p in policies {
        p.validate()?;
    }

    let events = specs
        .iter()
        .map(|spec| {
            let runs = policies
                .par_iter()
                .enumerate()
                .map(|(i, policy)| {
                    let id = run_id(&spec.event_id, i);
                    let seed = run_seed(seed, spec, policy);
                    let out = run_event(spec, policy, &id, seed)?;
                    debug!("{id}: completed = {}, stats = {:?}", out.completed, out.stats);
                    Ok(RunRecord {
                        run_id: id,
                        policy: policy.clone(),
                        seed,
                        ego: out.ego,
                        others: out.platoon,
                        completed: out.completed,
                        stats: out.stats,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut window = spec.window();
            window.vehicle_ids = runs.iter().map(|r| r.run_id.clone()).collect();
            Ok(EventData {
                spec: spec.clone(),
                window,
                route: spec.route(),
                obstacles: spec.obstacles(),
                runs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { events })
}
