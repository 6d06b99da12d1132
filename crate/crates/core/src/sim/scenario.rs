use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::idm::{IdmParams, LeadProfile};
use crate::traj::{EventWindow, LaneId, LaneSpec, Obstacle, RouteMeta, DEFAULT_DT, DEFAULT_VEHICLE_LENGTH};

/// The three kinds of mandatory lane change the presets model. All of them
/// reduce to the same geometry: the ego lane stops being usable at a fixed
/// route position and the ego has to join a slower platoon next to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Lane blocked by a stopped vehicle.
    Incident,
    /// Exit lane must be reached before the diverge.
    OffRamp,
    /// Acceleration lane ends.
    OnRamp,
}

/// How the platoon follower behind a targeted gap reacts to a signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MergeResistance {
    /// Chance that the follower closes the gap instead of yielding.
    pub probability: f64,
    /// Time headway the follower adopts while resisting, s.
    pub reduced_headway: f64,
    /// The follower only notices signals from an ego within this distance, m.
    pub detection_range: f64,
}

impl Default for MergeResistance {
    fn default() -> Self {
        Self {
            probability: 0.3,
            reduced_headway: 0.4,
            detection_range: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatoonSpec {
    /// Vehicles in the platoon, leader included. Zero leaves the target lane empty.
    pub size: usize,
    /// Front position of the leader at t = 0.
    pub leader_start_s: f64,
    pub lead: LeadProfile,
    /// Follower parameters; the headway is redrawn per follower.
    pub idm: IdmParams,
    /// Follower time headways are drawn uniformly from this range.
    pub headway_range: [f64; 2],
}

impl Default for PlatoonSpec {
    fn default() -> Self {
        Self {
            size: 9,
            leader_start_s: 200.0,
            lead: LeadProfile::default(),
            idm: IdmParams {
                desired_speed: 16.0,
                ..IdmParams::default()
            },
            headway_range: [1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub event_id: String,
    pub kind: ScenarioKind,
    pub speed_limit: f64,
    pub ego_lane: LaneId,
    pub target_lane: LaneId,
    /// Route position from which the ego lane is unusable.
    pub constraint_s: f64,
    pub window_start_s: f64,
    pub window_end_s: f64,
    pub ego_start_s: f64,
    pub ego_start_speed: f64,
    pub platoon: PlatoonSpec,
    #[serde(default)]
    pub resistance: MergeResistance,
    /// Seeds the platoon spawn draws; independent of the per-run seed.
    pub platoon_seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_vehicle_length")]
    pub vehicle_length: f64,
    /// Runs still short of the window end after this long are reported incomplete.
    #[serde(default = "default_max_duration")]
    pub max_duration: f64,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_vehicle_length() -> f64 {
    DEFAULT_VEHICLE_LENGTH
}

fn default_max_duration() -> f64 {
    600.0
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("scenario {}: {msg}", self.event_id)));
        if self.event_id.is_empty() {
            return Err(Error::Config("scenario needs an event id".into()));
        }
        if !(self.speed_limit > 0.0) || !(self.dt > 0.0) || !(self.max_duration > 0.0) {
            return fail("speed limit, time step and duration must be positive".into());
        }
        if self.ego_lane == self.target_lane {
            return fail("ego and target lanes must differ".into());
        }
        if !(self.ego_start_s < self.window_start_s
            && self.window_start_s < self.constraint_s
            && self.constraint_s < self.window_end_s)
        {
            return fail(format!(
                "expected ego start < window start < constraint < window end, got {} / {} / {} / {}",
                self.ego_start_s, self.window_start_s, self.constraint_s, self.window_end_s
            ));
        }
        if !(self.ego_start_speed >= 0.0) {
            return fail("ego start speed must be non-negative".into());
        }
        let [lo, hi] = self.platoon.headway_range;
        if !(lo > 0.0 && hi >= lo) {
            return fail(format!("headway range [{lo}, {hi}] is not a positive interval"));
        }
        let r = &self.resistance;
        if !(0.0..=1.0).contains(&r.probability) || !(r.reduced_headway > 0.0) || !(r.detection_range >= 0.0) {
            return fail(format!("invalid merge resistance {r:?}"));
        }
        self.platoon.idm.validate()?;
        self.platoon.lead.validate()
    }

    pub fn window(&self) -> EventWindow {
        EventWindow {
            event_id: self.event_id.clone(),
            start_s: self.window_start_s,
            end_s: self.window_end_s,
            vehicle_ids: Vec::new(),
        }
    }

    pub fn route(&self) -> RouteMeta {
        RouteMeta {
            speed_limit: self.speed_limit,
            lanes: vec![
                LaneSpec {
                    id: self.ego_lane,
                    adjacent: vec![self.target_lane],
                    closed_from: Some(self.constraint_s),
                },
                LaneSpec {
                    id: self.target_lane,
                    adjacent: vec![self.ego_lane],
                    closed_from: None,
                },
            ],
            polyline: None,
        }
    }

    /// The end of the usable ego lane, as a stationary object whose rear
    /// sits at the constraint.
    pub fn obstacles(&self) -> Vec<Obstacle> {
        vec![Obstacle {
            lane_id: self.ego_lane,
            s: self.constraint_s + self.vehicle_length,
        }]
    }
}
