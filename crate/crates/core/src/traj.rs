//! Trajectory and scene model.
//!
//! Tracks are sequences of per-tick samples along a single route coordinate
//! `s` (arc length, meters). Planar `(x, y)` coordinates are projected onto
//! the route once at ingestion; everything downstream is one-dimensional.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type LaneId = i32;

/// Nominal recording interval (20 Hz).
pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_VEHICLE_LENGTH: f64 = 4.5;
pub const DEFAULT_SENSING_RANGE: f64 = 300.0;
pub const DEFAULT_LATERAL_TOLERANCE: f64 = 10.0;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub lane_id: LaneId,
    /// Front-bumper position along the route.
    pub s: f64,
    pub speed: f64,
    pub accel: f64,
}

/// Samples of one vehicle, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrack {
    id: String,
    records: Vec<TrajectoryRecord>,
}

impl VehicleTrack {
    pub fn new(id: impl Into<String>, records: Vec<TrajectoryRecord>) -> Result<Self> {
        let id = id.into();
        if records.is_empty() {
            return Err(Error::InvalidInput(format!("track {id} has no records")));
        }
        for (i, r) in records.iter().enumerate() {
            if !(r.time.is_finite() && r.s.is_finite() && r.speed.is_finite() && r.accel.is_finite())
            {
                return Err(Error::InvalidInput(format!(
                    "track {id}: non-finite value at record {i}"
                )));
            }
            if r.time < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "track {id}: negative time {} at record {i}",
                    r.time
                )));
            }
            if r.speed < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "track {id}: negative speed {} at record {i}",
                    r.speed
                )));
            }
        }
        if let Some(i) = records.windows(2).position(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidInput(format!(
                "track {id}: time not strictly increasing at record {}",
                i + 1
            )));
        }
        Ok(Self { id, records })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.time)
    }

    /// Shift every timestamp by `offset` seconds.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        let records = self
            .records
            .iter()
            .map(|r| TrajectoryRecord {
                time: r.time + offset,
                ..*r
            })
            .collect();
        Self::new(self.id.clone(), records)
    }

    /// Time at which the front bumper first reaches `s`, linearly interpolated
    /// between ticks. `None` if the track never reaches `s` or starts past it.
    pub fn crossing_time(&self, s: f64) -> Option<f64> {
        let i = self.records.iter().position(|r| r.s >= s)?;
        let hi = &self.records[i];
        if i == 0 {
            return (hi.s == s).then_some(hi.time);
        }
        let lo = &self.records[i - 1];
        let frac = (s - lo.s) / (hi.s - lo.s);
        Some(lo.time + frac * (hi.time - lo.time))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderState {
    pub speed: f64,
    /// Bumper-to-bumper spacing.
    pub gap: f64,
}

/// What the ego sees ahead in one candidate lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneContext {
    pub lane_id: LaneId,
    pub leader: Option<LeaderState>,
    pub obstacle_gap: Option<f64>,
}

impl LaneContext {
    pub fn free(lane_id: LaneId) -> Self {
        Self {
            lane_id,
            leader: None,
            obstacle_gap: None,
        }
    }

    pub fn with_leader(lane_id: LaneId, speed: f64, gap: f64) -> Self {
        Self {
            lane_id,
            leader: Some(LeaderState { speed, gap }),
            obstacle_gap: None,
        }
    }

    pub fn with_obstacle(mut self, gap: f64) -> Self {
        self.obstacle_gap = Some(gap);
        self
    }
}

/// Ego state plus per-lane surroundings at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub time: f64,
    pub ego_speed: f64,
    pub ego_lane: LaneId,
    pub lanes: Vec<LaneContext>,
    pub speed_limit: f64,
}

impl SceneSnapshot {
    pub fn validate(&self) -> Result<()> {
        if self.lanes.is_empty() || self.lanes.len() > 3 {
            return Err(Error::InvalidInput(format!(
                "snapshot at t = {} has {} candidate lanes (expected 1 to 3)",
                self.time,
                self.lanes.len()
            )));
        }
        if !self.lanes.iter().any(|l| l.lane_id == self.ego_lane) {
            return Err(Error::InvalidInput(format!(
                "ego lane {} missing from candidate lanes at t = {}",
                self.ego_lane, self.time
            )));
        }
        if !(self.speed_limit > 0.0) {
            return Err(Error::InvalidInput(format!(
                "speed limit must be positive, got {}",
                self.speed_limit
            )));
        }
        if !(self.ego_speed >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "ego speed must be non-negative, got {}",
                self.ego_speed
            )));
        }
        for lane in &self.lanes {
            let bad_leader = lane
                .leader
                .is_some_and(|l| !(l.gap >= 0.0) || !(l.speed >= 0.0));
            let bad_obstacle = lane.obstacle_gap.is_some_and(|g| !(g >= 0.0));
            if bad_leader || bad_obstacle {
                return Err(Error::InvalidInput(format!(
                    "lane {} at t = {}: gaps and speeds must be non-negative",
                    lane.lane_id, self.time
                )));
            }
        }
        Ok(())
    }

    pub fn lane(&self, lane_id: LaneId) -> Option<&LaneContext> {
        self.lanes.iter().find(|l| l.lane_id == lane_id)
    }
}

/// Route section over which travel time and aggregate metrics are measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventWindow {
    pub event_id: String,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default)]
    pub vehicle_ids: Vec<String>,
}

impl EventWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.end_s > self.start_s) {
            return Err(Error::Config(format!(
                "event {}: window end {} must exceed start {}",
                self.event_id, self.end_s, self.start_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneSpec {
    pub id: LaneId,
    #[serde(default)]
    pub adjacent: Vec<LaneId>,
    /// The lane ends (or is blocked) from this route position onward.
    #[serde(default)]
    pub closed_from: Option<f64>,
}

impl LaneSpec {
    pub fn is_open_at(&self, s: f64) -> bool {
        self.closed_from.is_none_or(|end| s < end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub lane_id: LaneId,
    /// Front position of the stationary object, same convention as vehicles.
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteMeta {
    pub speed_limit: f64,
    pub lanes: Vec<LaneSpec>,
    /// Centerline used to project planar coordinates, if the data has any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polyline: Option<Vec<[f64; 2]>>,
}

impl RouteMeta {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_limit > 0.0) {
            return Err(Error::Config(format!(
                "route speed limit must be positive, got {}",
                self.speed_limit
            )));
        }
        if self.lanes.is_empty() {
            return Err(Error::Config("route declares no lanes".into()));
        }
        for lane in &self.lanes {
            if lane.adjacent.len() > 2 {
                return Err(Error::Config(format!(
                    "lane {} lists {} adjacent lanes; at most two are supported",
                    lane.id,
                    lane.adjacent.len()
                )));
            }
            if let Some(missing) = lane
                .adjacent
                .iter()
                .find(|a| !self.lanes.iter().any(|l| l.id == **a))
            {
                return Err(Error::Config(format!(
                    "lane {} is adjacent to undeclared lane {missing}",
                    lane.id
                )));
            }
        }
        Ok(())
    }

    pub fn lane(&self, id: LaneId) -> Option<&LaneSpec> {
        self.lanes.iter().find(|l| l.id == id)
    }

    /// Ego lane plus adjacent lanes still open at `s`, ascending by id.
    pub fn candidate_lanes(&self, ego_lane: LaneId, s: f64) -> Result<Vec<LaneId>> {
        let spec = self.lane(ego_lane).ok_or_else(|| {
            Error::Config(format!("ego lane {ego_lane} is not declared in the route"))
        })?;
        let mut lanes = vec![ego_lane];
        for adj in &spec.adjacent {
            if self.lane(*adj).is_some_and(|l| l.is_open_at(s)) && !lanes.contains(adj) {
                lanes.push(*adj);
            }
        }
        lanes.sort_unstable();
        Ok(lanes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub vehicle_length: f64,
    pub sensing_range: f64,
    /// Longest sampling hole that resampling is allowed to bridge.
    pub max_interp_gap: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            vehicle_length: DEFAULT_VEHICLE_LENGTH,
            sensing_range: DEFAULT_SENSING_RANGE,
            max_interp_gap: 1.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.vehicle_length >= 0.0) || !(self.sensing_range > 0.0) || !(self.max_interp_gap > 0.0)
        {
            return Err(Error::Config(format!("invalid scene configuration {self:?}")));
        }
        Ok(())
    }
}

/// Simple polyline with cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    points: Vec<[f64; 2]>,
    cumulative: Vec<f64>,
}

impl Route {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("route needs at least two points".into()));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for w in points.windows(2) {
            let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            if !(len > 0.0) {
                return Err(Error::Config("route has repeated consecutive points".into()));
            }
            cumulative.push(cumulative.last().unwrap() + len);
        }
        Ok(Self { points, cumulative })
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Arc length of the closest route point to `(x, y)`.
    pub fn project(&self, x: f64, y: f64, tolerance: f64) -> Result<f64> {
        let mut best = (f64::INFINITY, 0.0);
        for (i, w) in self.points.windows(2).enumerate() {
            let (ax, ay) = (w[0][0], w[0][1]);
            let (dx, dy) = (w[1][0] - ax, w[1][1] - ay);
            let len2 = dx * dx + dy * dy;
            let t = (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0);
            let (px, py) = (ax + t * dx, ay + t * dy);
            let dist = (x - px).hypot(y - py);
            if dist < best.0 {
                best = (dist, self.cumulative[i] + t * len2.sqrt());
            }
        }
        if best.0 > tolerance {
            return Err(Error::OffRoute {
                x,
                y,
                distance: best.0,
                tolerance,
            });
        }
        Ok(best.1)
    }
}

pub fn project_to_route(x: f64, y: f64, route: &Route) -> Result<f64> {
    route.project(x, y, DEFAULT_LATERAL_TOLERANCE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    lane_id: LaneId,
    s: f64,
    speed: f64,
}

/// Linear interpolation of `track` onto `times`; lane ids are held from the
/// preceding sample. Ticks outside the track's span map to `None`.
fn resample_onto(track: &VehicleTrack, times: &[f64], max_gap: f64) -> Result<Vec<Option<Sample>>> {
    let recs = track.records();
    let mut out = Vec::with_capacity(times.len());
    let mut j = 0usize;
    for &t in times {
        if t < recs[0].time - TIME_EPS || t > recs[recs.len() - 1].time + TIME_EPS {
            out.push(None);
            continue;
        }
        while j + 1 < recs.len() && recs[j + 1].time <= t + TIME_EPS {
            j += 1;
        }
        let lo = &recs[j];
        if (lo.time - t).abs() <= TIME_EPS || j + 1 == recs.len() {
            out.push(Some(Sample {
                lane_id: lo.lane_id,
                s: lo.s,
                speed: lo.speed,
            }));
            continue;
        }
        let hi = &recs[j + 1];
        let span = hi.time - lo.time;
        if span > max_gap {
            return Err(Error::Resampling {
                vehicle_id: track.id().to_string(),
                reason: format!(
                    "sampling hole of {span:.3} s between t = {} and t = {} exceeds {max_gap} s",
                    lo.time, hi.time
                ),
            });
        }
        let f = (t - lo.time) / span;
        out.push(Some(Sample {
            lane_id: lo.lane_id,
            s: lo.s + f * (hi.s - lo.s),
            speed: lo.speed + f * (hi.speed - lo.speed),
        }));
    }
    Ok(out)
}

/// One snapshot per ego tick: per candidate lane, the nearest vehicle and
/// obstacle strictly ahead of the ego within sensing range.
pub fn build_snapshots(
    ego: &VehicleTrack,
    others: &[VehicleTrack],
    obstacles: &[Obstacle],
    route: &RouteMeta,
    cfg: &SceneConfig,
) -> Result<Vec<SceneSnapshot>> {
    route.validate()?;
    cfg.validate()?;
    let times: Vec<f64> = ego.times().collect();
    let resampled = others
        .iter()
        .filter(|o| o.id() != ego.id())
        .map(|o| resample_onto(o, &times, cfg.max_interp_gap))
        .collect::<Result<Vec<_>>>()?;

    let gap_ahead = |ego_s: f64, other_s: f64| -> Option<f64> {
        if other_s <= ego_s {
            return None;
        }
        let gap = (other_s - cfg.vehicle_length - ego_s).max(0.0);
        (gap <= cfg.sensing_range).then_some(gap)
    };

    ego.records()
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let lanes = route
                .candidate_lanes(rec.lane_id, rec.s)?
                .into_iter()
                .map(|lane_id| {
                    let leader = resampled
                        .iter()
                        .filter_map(|track| track[i])
                        .filter(|o| o.lane_id == lane_id)
                        .filter_map(|o| gap_ahead(rec.s, o.s).map(|gap| LeaderState { speed: o.speed, gap }))
                        .min_by(|a, b| a.gap.total_cmp(&b.gap));
                    let obstacle_gap = obstacles
                        .iter()
                        .filter(|o| o.lane_id == lane_id)
                        .filter_map(|o| gap_ahead(rec.s, o.s))
                        .min_by(f64::total_cmp);
                    LaneContext {
                        lane_id,
                        leader,
                        obstacle_gap,
                    }
                })
                .collect();
            Ok(SceneSnapshot {
                time: rec.time,
                ego_speed: rec.speed,
                ego_lane: rec.lane_id,
                lanes,
                speed_limit: route.speed_limit,
            })
        })
        .collect()
}

/// Duration between the interpolated crossings of the window boundaries.
pub fn travel_time(track: &VehicleTrack, window: &EventWindow) -> Result<f64> {
    let (t0, t1) = crossing_times(track, window)?;
    Ok(t1 - t0)
}

fn crossing_times(track: &VehicleTrack, window: &EventWindow) -> Result<(f64, f64)> {
    window.validate()?;
    let incomplete = || Error::IncompleteTravel {
        vehicle_id: track.id().to_string(),
        start_s: window.start_s,
        end_s: window.end_s,
    };
    let t0 = track.crossing_time(window.start_s).ok_or_else(incomplete)?;
    let t1 = track.crossing_time(window.end_s).ok_or_else(incomplete)?;
    Ok((t0, t1))
}

/// Indices of the ticks that fall between the window crossings.
pub fn window_ticks(track: &VehicleTrack, window: &EventWindow) -> Result<Range<usize>> {
    let (t0, t1) = crossing_times(track, window)?;
    let recs = track.records();
    let first = recs.partition_point(|r| r.time < t0 - TIME_EPS);
    let last = recs.partition_point(|r| r.time <= t1 + TIME_EPS);
    Ok(first..last)
}
