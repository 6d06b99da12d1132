use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::idm::{idm_accel, idm_free_accel, lead_speed, IdmParams};
use crate::sim::policy::{EgoPolicy, PolicyKind};
use crate::sim::scenario::ScenarioSpec;
use crate::traj::{LaneId, TrajectoryRecord, VehicleTrack};

/// Position gain of the gap-tracking controller, 1/s.
const TRACK_POSITION_GAIN: f64 = 0.15;
/// Speed gain of the gap-tracking controller, 1/s.
const TRACK_SPEED_GAIN: f64 = 0.8;
const TRACK_MAX_DECEL: f64 = 3.0;
/// A gap counts as reached once its center is this close, m.
const ALIGN_TOLERANCE: f64 = 3.0;
/// ... and the ego's speed is within this much of the gap's speed, m/s.
const SPEED_TOLERANCE: f64 = 2.0;
/// Closing speed is converted to extra required spacing over this horizon, s.
const CLOSING_HORIZON: f64 = 1.0;
/// Runs end once the ego is this far past the window end, m.
const FINISH_MARGIN: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: String,
    pub lane: LaneId,
    pub s: f64,
    pub v: f64,
    pub a: f64,
}

impl Vehicle {
    fn record(&self, time: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            time,
            lane_id: self.lane,
            s: self.s,
            speed: self.v,
            accel: self.a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "kebab-case")]
pub enum EgoPhase {
    Approach { gap: usize },
    /// `front_gap` is the spacing to the gap's front vehicle when signalling
    /// started; the ego holds it until the lane change.
    Signal { gap: usize, elapsed: f64, resisted: bool, front_gap: f64 },
    Merged,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeStats {
    pub attempts: u32,
    pub resisted: u32,
    pub merge_time: Option<f64>,
    pub merge_s: Option<f64>,
    pub merge_gap: Option<usize>,
}

#[derive(Debug, Clone)]
struct Ego {
    vehicle: Vehicle,
    policy: EgoPolicy,
    idm: IdmParams,
    phase: EgoPhase,
    stats: MergeStats,
    records: Vec<TrajectoryRecord>,
}

/// Geometry of one candidate gap as seen from the ego.
#[derive(Debug, Clone, Copy)]
struct GapView {
    target_s: f64,
    speed: f64,
    front_gap: f64,
    front_speed: f64,
    rear: Option<(f64, f64)>,
}

/// Platoon in the target lane plus (optionally) one ego vehicle.
#[derive(Debug, Clone)]
pub struct World {
    spec: ScenarioSpec,
    step_index: u64,
    platoon: Vec<Vehicle>,
    params: Vec<IdmParams>,
    nominal_headway: Vec<f64>,
    platoon_records: Vec<Vec<TrajectoryRecord>>,
    ego: Option<Ego>,
}

impl World {
    /// Spawns the platoon at equilibrium spacing behind its leader, and the
    /// ego (if any) at its start position.
    pub fn new(spec: &ScenarioSpec, policy: Option<&EgoPolicy>, id_prefix: &str) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.platoon_seed);
        let p = &spec.platoon;
        let v0 = lead_speed(0.0, &p.lead);
        let mut platoon: Vec<Vehicle> = Vec::with_capacity(p.size);
        let mut params = Vec::with_capacity(p.size);
        for i in 0..p.size {
            let (s, idm) = match platoon.last() {
                None => (p.leader_start_s, p.idm),
                Some(ahead) => {
                    let [lo, hi] = p.headway_range;
                    let headway = if hi > lo { rng.gen_range(lo..hi) } else { lo };
                    let idm = IdmParams { headway, ..p.idm };
                    (ahead.s - spec.vehicle_length - idm.equilibrium_gap(v0), idm)
                }
            };
            platoon.push(Vehicle {
                id: format!("{id_prefix}-P{i:02}"),
                lane: spec.target_lane,
                s,
                v: v0,
                a: 0.0,
            });
            params.push(idm);
        }
        let nominal_headway = params.iter().map(|p| p.headway).collect();
        let platoon_records = platoon.iter().map(|v| vec![v.record(0.0)]).collect();

        let ego = match policy {
            None => None,
            Some(policy) => {
                policy.validate()?;
                let vehicle = Vehicle {
                    id: id_prefix.to_string(),
                    lane: spec.ego_lane,
                    s: spec.ego_start_s,
                    v: spec.ego_start_speed,
                    a: 0.0,
                };
                let idm = IdmParams {
                    desired_speed: policy.speed_factor * spec.speed_limit,
                    min_gap: 2.0,
                    headway: policy.headway,
                    max_accel: 2.0,
                    comfortable_decel: 2.5,
                    exponent: 4.0,
                    accel_floor: -8.0,
                };
                let records = vec![vehicle.record(0.0)];
                Some(Ego {
                    vehicle,
                    policy: policy.clone(),
                    idm,
                    phase: EgoPhase::Approach { gap: 0 },
                    stats: MergeStats::default(),
                    records,
                })
            }
        };

        let mut world = Self {
            spec: spec.clone(),
            step_index: 0,
            platoon,
            params,
            nominal_headway,
            platoon_records,
            ego,
        };
        let gap = world.ego.is_some().then(|| world.initial_gap());
        if let (Some(gap), Some(ego)) = (gap, world.ego.as_mut()) {
            ego.phase = EgoPhase::Approach { gap };
        }
        Ok(world)
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.spec.dt
    }

    pub fn platoon(&self) -> &[Vehicle] {
        &self.platoon
    }

    pub fn ego(&self) -> Option<&Vehicle> {
        self.ego.as_ref().map(|e| &e.vehicle)
    }

    pub fn ego_phase(&self) -> Option<EgoPhase> {
        self.ego.as_ref().map(|e| e.phase)
    }

    pub fn merge_stats(&self) -> Option<MergeStats> {
        self.ego.as_ref().map(|e| e.stats)
    }

    pub fn follower_headway(&self, index: usize) -> Option<f64> {
        self.params.get(index).map(|p| p.headway)
    }

    /// Time headways the followers were spawned with (the leader has none).
    pub fn spawn_headways(&self) -> &[f64] {
        self.nominal_headway.get(1..).unwrap_or(&[])
    }

    fn tail_gap(&self) -> usize {
        self.platoon.len().saturating_sub(1)
    }

    fn initial_gap(&self) -> usize {
        let ego = self.ego.as_ref().expect("ego present");
        let tail = self.tail_gap();
        match ego.policy.kind {
            PolicyKind::LateMerge => 0,
            PolicyKind::TargetGap => ego.policy.target_gap.min(tail),
            PolicyKind::EarlyMerge | PolicyKind::Hesitant => {
                // The first gap the ego will reach: the rearmost one whose
                // center is still ahead of it.
                (0..=tail)
                    .rev()
                    .find(|k| self.gap_view(*k, &ego.vehicle, &ego.idm).target_s >= ego.vehicle.s)
                    .unwrap_or(0)
            }
        }
    }

    fn gap_view(&self, k: usize, ego: &Vehicle, idm: &IdmParams) -> GapView {
        let len = self.spec.vehicle_length;
        let Some(front) = self.platoon.get(k) else {
            // Empty target lane: nothing to align with.
            return GapView {
                target_s: f64::INFINITY,
                speed: idm.desired_speed,
                front_gap: f64::INFINITY,
                front_speed: idm.desired_speed,
                rear: None,
            };
        };
        let front_gap = front.s - len - ego.s;
        match self.platoon.get(k + 1) {
            Some(rear) => GapView {
                target_s: 0.5 * (front.s + rear.s),
                speed: 0.5 * (front.v + rear.v),
                front_gap,
                front_speed: front.v,
                rear: Some((ego.s - len - rear.s, rear.v)),
            },
            None => GapView {
                target_s: front.s - len - (idm.min_gap + front.v * idm.headway),
                speed: front.v,
                front_gap,
                front_speed: front.v,
                rear: None,
            },
        }
    }

    fn acceptable(view: &GapView, v: f64, threshold: f64) -> bool {
        let front_ok = view.front_gap >= threshold + (v - view.front_speed).max(0.0) * CLOSING_HORIZON;
        let rear_ok = view
            .rear
            .is_none_or(|(gap, rear_v)| gap >= threshold + (rear_v - v).max(0.0) * CLOSING_HORIZON);
        front_ok && rear_ok
    }

    fn collision(&self, follower: &str, leader: &str, gap: f64) -> Error {
        Error::Collision {
            time: self.time(),
            follower: follower.to_string(),
            leader: leader.to_string(),
            gap,
        }
    }

    fn platoon_accels(&self) -> Result<Vec<f64>> {
        let dt = self.spec.dt;
        let len = self.spec.vehicle_length;
        let t_next = self.time() + dt;
        let merged_ego = self
            .ego
            .as_ref()
            .filter(|e| e.phase == EgoPhase::Merged)
            .map(|e| &e.vehicle);
        // A follower that did not resist yields: it also keeps its distance
        // to the signalling ego, as if it were already in the lane.
        let yield_to = self.ego.as_ref().and_then(|e| match e.phase {
            EgoPhase::Signal { gap, resisted: false, .. } => Some((gap + 1, &e.vehicle)),
            _ => None,
        });
        let mut out = Vec::with_capacity(self.platoon.len());
        let Some(leader) = self.platoon.first() else {
            return Ok(out);
        };
        out.push((lead_speed(t_next, &self.spec.platoon.lead) - leader.v) / dt);
        for i in 1..self.platoon.len() {
            let me = &self.platoon[i];
            let mut pred = &self.platoon[i - 1];
            if let Some(ego) = merged_ego {
                if ego.s > me.s && ego.s < pred.s {
                    pred = ego;
                }
            }
            let gap = pred.s - len - me.s;
            if gap <= 0.0 {
                return Err(self.collision(&me.id, &pred.id, gap));
            }
            let mut a = idm_accel(me.v, gap, me.v - pred.v, &self.params[i])?;
            if let Some((_, ego)) = yield_to.filter(|(k, ego)| *k == i && ego.s > me.s) {
                let ego_gap = ego.s - len - me.s;
                if ego_gap > 0.0 {
                    a = a.min(idm_accel(me.v, ego_gap, me.v - ego.v, &self.params[i])?);
                }
            }
            out.push(a);
        }
        Ok(out)
    }

    fn set_follower_headway(&mut self, index: usize, resisting: bool) {
        if let Some(p) = self.params.get_mut(index) {
            p.headway = if resisting {
                self.spec.resistance.reduced_headway
            } else {
                self.nominal_headway[index]
            };
        }
    }

    /// Advances the ego's lane-change state machine and returns its command.
    fn ego_control(&mut self, rng: &mut impl Rng) -> Result<Option<f64>> {
        let Some(ego) = self.ego.as_ref() else {
            return Ok(None);
        };
        let spec = self.spec.clone();
        let dt = spec.dt;
        let len = spec.vehicle_length;
        let vehicle = ego.vehicle.clone();
        let policy = ego.policy.clone();
        let idm = ego.idm;
        let tail = self.tail_gap();

        if ego.phase == EgoPhase::Merged {
            let pred = self
                .platoon
                .iter()
                .filter(|p| p.s > vehicle.s)
                .min_by(|a, b| a.s.total_cmp(&b.s));
            let a = match pred {
                Some(p) => {
                    let gap = p.s - len - vehicle.s;
                    if gap <= 0.0 {
                        return Err(self.collision(&vehicle.id, &p.id, gap));
                    }
                    idm_accel(vehicle.v, gap, vehicle.v - p.v, &idm)?
                }
                None => idm_free_accel(vehicle.v, &idm),
            };
            return Ok(Some(a));
        }

        let mut phase = ego.phase;
        let mut stats = ego.stats;
        let mut headway_change = None;
        match phase {
            EgoPhase::Approach { gap } => {
                let view = self.gap_view(gap, &vehicle, &idm);
                if gap < tail && view.target_s > spec.constraint_s - policy.commit_margin {
                    phase = EgoPhase::Approach { gap: gap + 1 };
                } else {
                    let aligned = match view.rear {
                        Some(_) => {
                            (view.target_s - vehicle.s).abs() <= ALIGN_TOLERANCE
                                && (vehicle.v - view.speed).abs() <= SPEED_TOLERANCE
                        }
                        None => true,
                    };
                    if aligned && Self::acceptable(&view, vehicle.v, policy.gap_acceptance) {
                        stats.attempts += 1;
                        let mut resisted = false;
                        if let Some(rear) = self.platoon.get(gap + 1) {
                            if vehicle.s - rear.s <= spec.resistance.detection_range {
                                resisted = rng.gen::<f64>() < spec.resistance.probability;
                            }
                        }
                        if resisted {
                            stats.resisted += 1;
                            headway_change = Some((gap + 1, true));
                        }
                        phase = EgoPhase::Signal {
                            gap,
                            elapsed: 0.0,
                            resisted,
                            front_gap: view.front_gap,
                        };
                    }
                }
            }
            EgoPhase::Signal { gap, elapsed, resisted, front_gap } => {
                let view = self.gap_view(gap, &vehicle, &idm);
                if !Self::acceptable(&view, vehicle.v, policy.gap_acceptance) {
                    if resisted {
                        headway_change = Some((gap + 1, false));
                    }
                    let next = if resisted { (gap + 1).min(tail) } else { gap };
                    phase = EgoPhase::Approach { gap: next };
                } else if elapsed + dt >= policy.commit_delay - 1e-9 {
                    if resisted {
                        headway_change = Some((gap + 1, false));
                    }
                    stats.merge_time = Some(self.time() + dt);
                    stats.merge_gap = Some(gap);
                    phase = EgoPhase::Merged;
                } else {
                    phase = EgoPhase::Signal {
                        gap,
                        elapsed: elapsed + dt,
                        resisted,
                        front_gap,
                    };
                }
            }
            EgoPhase::Merged => unreachable!(),
        }

        if let Some((index, resisting)) = headway_change {
            self.set_follower_headway(index, resisting);
        }

        // Longitudinal command: track the current gap, but never run into
        // the end of the usable lane.
        let gap = match phase {
            EgoPhase::Approach { gap } | EgoPhase::Signal { gap, .. } => gap,
            EgoPhase::Merged => stats.merge_gap.unwrap_or(tail),
        };
        let view = self.gap_view(gap, &vehicle, &idm);
        let (target_s, target_speed) = match (phase, self.platoon.get(gap)) {
            // While signalling, keep station on the vehicle to merge behind so
            // the follower's reaction does not move the ego.
            (EgoPhase::Signal { front_gap, .. }, Some(front)) if front_gap.is_finite() => {
                (front.s - len - front_gap, front.v)
            }
            _ => (view.target_s, view.speed),
        };
        let v_des = idm.desired_speed;
        let error = target_s - vehicle.s;
        let v_ref = (target_speed + TRACK_POSITION_GAIN * error).clamp(0.0, v_des);
        let a_track = (TRACK_SPEED_GAIN * (v_ref - vehicle.v)).clamp(-TRACK_MAX_DECEL, idm.max_accel);
        let to_end = spec.constraint_s - vehicle.s;
        if to_end <= 0.0 {
            return Err(self.collision(&vehicle.id, "lane-end", to_end));
        }
        let a_end = idm_accel(vehicle.v, to_end, vehicle.v, &idm)?;
        let command = a_track.min(a_end);

        let target_lane = spec.target_lane;
        let ego = self.ego.as_mut().expect("ego present");
        if phase == EgoPhase::Merged {
            ego.vehicle.lane = target_lane;
            stats.merge_s = Some(vehicle.s);
        }
        ego.phase = phase;
        ego.stats = stats;
        Ok(Some(command))
    }

    /// One semi-implicit Euler step. All accelerations are computed from the
    /// current state before anyone moves.
    pub fn step(&mut self, rng: &mut impl Rng) -> Result<()> {
        let dt = self.spec.dt;
        let platoon_a = self.platoon_accels()?;
        let ego_a = self.ego_control(rng)?;
        let t_next = (self.step_index + 1) as f64 * dt;

        let advance = |v: &mut Vehicle, a: f64| {
            let v_new = (v.v + a * dt).max(0.0);
            v.a = (v_new - v.v) / dt;
            v.v = v_new;
            v.s += v_new * dt;
        };
        for (i, (veh, a)) in self.platoon.iter_mut().zip(platoon_a).enumerate() {
            advance(veh, a);
            self.platoon_records[i].push(veh.record(t_next));
        }
        if let (Some(ego), Some(a)) = (self.ego.as_mut(), ego_a) {
            advance(&mut ego.vehicle, a);
            ego.records.push(ego.vehicle.record(t_next));
        }
        self.step_index += 1;
        Ok(())
    }

    fn finished(&self) -> bool {
        self.ego
            .as_ref()
            .is_some_and(|e| e.vehicle.s >= self.spec.window_end_s + FINISH_MARGIN)
    }

    pub fn into_output(self) -> Result<RunOutput> {
        let completed = self.finished();
        let ego = self.ego.ok_or_else(|| Error::InvalidInput("world has no ego vehicle".into()))?;
        let platoon = self
            .platoon
            .iter()
            .zip(self.platoon_records)
            .map(|(v, recs)| VehicleTrack::new(v.id.clone(), recs))
            .collect::<Result<Vec<_>>>()?;
        Ok(RunOutput {
            ego: VehicleTrack::new(ego.vehicle.id.clone(), ego.records)?,
            platoon,
            completed,
            stats: ego.stats,
        })
    }

    /// Steps until the ego clears the window or the time budget runs out.
    pub fn run_to_completion(&mut self, rng: &mut impl Rng) -> Result<()> {
        let max_steps = (self.spec.max_duration / self.spec.dt).ceil() as u64;
        while !self.finished() && self.step_index < max_steps {
            self.step(rng)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub ego: VehicleTrack,
    pub platoon: Vec<VehicleTrack>,
    pub completed: bool,
    pub stats: MergeStats,
}

/// Simulates one ego under `policy` through the scenario. Deterministic in
/// `(spec, policy, seed)`.
pub fn run_event(spec: &ScenarioSpec, policy: &EgoPolicy, run_id: &str, seed: u64) -> Result<RunOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = World::new(spec, Some(policy), run_id)?;
    world.run_to_completion(&mut rng)?;
    world.into_output()
}
