//! Idealized catch-up maneuver and projected attainable speed.
//!
//! The ego accelerates at `a1`, optionally cruises at the speed limit, then
//! decelerates at `a2` so that it matches the leader's speed with zero
//! remaining spacing. Surrounding traffic is frozen at its current speed.
//! The projected attainable speed is the mean ego speed over that maneuver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::PassConfig;
use crate::traj::{LaneContext, LaneId, SceneSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManeuverPhase {
    /// Accelerate, then decelerate onto the leader.
    TwoPhase,
    /// Accelerate, cruise at the limit, decelerate.
    LimitCapped,
    /// Too fast to accelerate at all: decelerate immediately.
    DecelOnly,
    /// Nothing ahead: accelerate to the limit and cruise.
    FreeLane,
    /// Already matched to the leader at zero spacing.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManeuverResult {
    pub duration: f64,
    pub distance: f64,
    pub v_proj: f64,
    pub phase: ManeuverPhase,
    /// Speed the ego holds once the maneuver ends.
    pub post_speed: f64,
    /// Set when the ego started above the speed limit.
    pub speeding: bool,
}

/// Mean speed of the two-phase profile, with peak `v_lead + u_p` below the limit.
pub fn two_phase_speed(v0: f64, v_lead: f64, d: f64, a1: f64, a2: f64) -> f64 {
    let u_p = two_phase_peak_excess(v0, v_lead, d, a1, a2);
    a1 * a2 * d / (a2 * (v_lead - v0) + (a2 - a1) * u_p) + v_lead
}

/// Mean speed of the profile with a cruise segment at `v_limit`.
pub fn limit_capped_speed(v0: f64, v_lead: f64, d: f64, a1: f64, a2: f64, v_limit: f64) -> f64 {
    let num = 2.0 * a1 * a2 * d * (v_limit - v_lead);
    let den = 2.0 * a1 * a2 * d + a2 * (v_limit - v0).powi(2) - a1 * (v_limit - v_lead).powi(2);
    num / den + v_lead
}

/// Peak speed above the leader's speed reached by the two-phase profile.
pub fn two_phase_peak_excess(v0: f64, v_lead: f64, d: f64, a1: f64, a2: f64) -> f64 {
    (a2 / (a2 - a1) * (2.0 * a1 * d + (v_lead - v0).powi(2))).sqrt()
}

/// Spacing at which the two-phase peak exactly reaches `v_limit`.
pub fn limit_boundary_gap(v0: f64, v_lead: f64, a1: f64, a2: f64, v_limit: f64) -> f64 {
    ((a2 - a1) / a2 * (v_limit - v_lead).powi(2) - (v_lead - v0).powi(2)) / (2.0 * a1)
}

fn check_inputs(v0: f64, v_limit: f64) -> Result<()> {
    if !(v0 >= 0.0) || !v0.is_finite() {
        return Err(Error::InvalidInput(format!("ego speed must be non-negative, got {v0}")));
    }
    if !(v_limit > 0.0) || !v_limit.is_finite() {
        return Err(Error::InvalidInput(format!("speed limit must be positive, got {v_limit}")));
    }
    Ok(())
}

/// Catch-up maneuver onto a leader at spacing `d` moving at `v_lead`.
///
/// A leader at or above the speed limit cannot be caught legally; unless the
/// ego is already too fast and must brake, the lane is then treated as free.
pub fn catch_up_maneuver(
    v0: f64,
    v_lead: f64,
    d: f64,
    cfg: &PassConfig,
    v_limit: f64,
) -> Result<ManeuverResult> {
    check_inputs(v0, v_limit)?;
    if !(v_lead >= 0.0) || !v_lead.is_finite() {
        return Err(Error::InvalidInput(format!("leader speed must be non-negative, got {v_lead}")));
    }
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("spacing must be non-negative, got {d}")));
    }
    let (a1, a2) = (cfg.a1, cfg.a2);
    let speeding = v0 > v_limit;
    let done = |duration: f64, v_proj: f64, phase| ManeuverResult {
        duration,
        distance: d + v_lead * duration,
        v_proj,
        phase,
        post_speed: v_lead,
        speeding,
    };

    if d <= cfg.gap_epsilon && (v0 - v_lead).abs() <= cfg.speed_epsilon {
        return Ok(done(0.0, v_lead, ManeuverPhase::Degenerate));
    }

    let closing = v0 - v_lead;
    if closing > 0.0 && closing * closing / (2.0 * a2.abs()) >= d {
        // Braking at a2_adj = -closing^2 / (2 d) lands exactly on the leader.
        let duration = 2.0 * d / closing;
        return Ok(done(duration, 0.5 * (v0 + v_lead), ManeuverPhase::DecelOnly));
    }

    if v_lead >= v_limit {
        let mut free = free_lane_maneuver(v0, cfg, v_limit)?;
        free.speeding = speeding;
        return Ok(free);
    }

    let u_p = two_phase_peak_excess(v0, v_lead, d, a1, a2);
    if v_lead + u_p <= v_limit {
        let duration = ((a2 - a1) * u_p + a2 * (v_lead - v0)) / (a1 * a2);
        let v_proj = if duration > 0.0 { v_lead + d / duration } else { v_lead };
        return Ok(done(duration, v_proj, ManeuverPhase::TwoPhase));
    }

    // Phase durations, with spacing closed in the leader's frame.
    let w0 = v0 - v_lead;
    let w_max = v_limit - v_lead;
    let accel_closure = (w_max * w_max - w0 * w0) / (2.0 * a1);
    let decel_closure = w_max * w_max / (2.0 * a2.abs());
    let cruise = (d - accel_closure - decel_closure) / w_max;
    let duration = (v_limit - v0) / a1 + cruise + w_max / a2.abs();
    let v_proj = limit_capped_speed(v0, v_lead, d, a1, a2, v_limit);
    Ok(done(duration, v_proj, ManeuverPhase::LimitCapped))
}

/// Accelerate to the limit and cruise. `v_proj` is averaged over
/// `max(T, horizon)`; the post-maneuver speed is the limit.
pub fn free_lane_maneuver(v0: f64, cfg: &PassConfig, v_limit: f64) -> Result<ManeuverResult> {
    check_inputs(v0, v_limit)?;
    let duration = (v_limit - v0).max(0.0) / cfg.a1;
    let distance = v0 * duration + 0.5 * cfg.a1 * duration * duration;
    let horizon = duration.max(cfg.free_lane_horizon);
    let v_proj = (distance + v_limit * (horizon - duration)) / horizon;
    Ok(ManeuverResult {
        duration,
        distance,
        v_proj,
        phase: ManeuverPhase::FreeLane,
        post_speed: v_limit,
        speeding: v0 > v_limit,
    })
}

/// Maneuver for one lane: the more restrictive of leader and obstacle.
pub fn lane_maneuver(
    lane: &LaneContext,
    v0: f64,
    cfg: &PassConfig,
    v_limit: f64,
) -> Result<ManeuverResult> {
    let leader = lane
        .leader
        .map(|l| catch_up_maneuver(v0, l.speed, l.gap, cfg, v_limit))
        .transpose()?;
    let obstacle = lane
        .obstacle_gap
        .map(|gap| catch_up_maneuver(v0, 0.0, gap, cfg, v_limit))
        .transpose()?;
    match (leader, obstacle) {
        (Some(l), Some(o)) => Ok(if o.v_proj < l.v_proj { o } else { l }),
        (Some(m), None) | (None, Some(m)) => Ok(m),
        (None, None) => free_lane_maneuver(v0, cfg, v_limit),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneProjection {
    pub lane_id: LaneId,
    pub maneuver: ManeuverResult,
    /// Mean speed over the common horizon.
    pub v_proj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLaneProjection {
    pub v_proj: f64,
    pub chosen_lane: LaneId,
    pub horizon: f64,
    pub lanes: Vec<LaneProjection>,
    pub speeding: bool,
}

/// Best mean speed over all candidate lanes, each lane's maneuver extended
/// at its post-maneuver speed to the longest maneuver duration.
pub fn v_proj_multi(snapshot: &SceneSnapshot, cfg: &PassConfig) -> Result<MultiLaneProjection> {
    if snapshot.lanes.is_empty() {
        return Err(Error::InvalidInput(format!(
            "snapshot at t = {} has no candidate lanes",
            snapshot.time
        )));
    }
    let v0 = snapshot.ego_speed;
    let v_limit = snapshot.speed_limit;
    let maneuvers = snapshot
        .lanes
        .iter()
        .map(|lane| Ok((lane.lane_id, lane_maneuver(lane, v0, cfg, v_limit)?)))
        .collect::<Result<Vec<_>>>()?;
    let speeding = maneuvers.iter().any(|(_, m)| m.speeding);

    if let [(lane_id, m)] = maneuvers[..] {
        return Ok(MultiLaneProjection {
            v_proj: m.v_proj,
            chosen_lane: lane_id,
            horizon: m.duration,
            lanes: vec![LaneProjection {
                lane_id,
                maneuver: m,
                v_proj: m.v_proj,
            }],
            speeding,
        });
    }

    let horizon = maneuvers.iter().map(|(_, m)| m.duration).fold(0.0, f64::max);
    let lanes: Vec<LaneProjection> = maneuvers
        .into_iter()
        .map(|(lane_id, m)| {
            let v_proj = if horizon > 0.0 {
                (m.distance + m.post_speed * (horizon - m.duration)) / horizon
            } else {
                m.post_speed
            };
            LaneProjection {
                lane_id,
                maneuver: m,
                v_proj,
            }
        })
        .collect();

    let ego_lane = snapshot.ego_lane;
    let best = lanes
        .iter()
        .max_by(|a, b| {
            a.v_proj
                .total_cmp(&b.v_proj)
                .then_with(|| (a.lane_id == ego_lane).cmp(&(b.lane_id == ego_lane)))
                .then_with(|| b.lane_id.cmp(&a.lane_id))
        })
        .expect("non-empty");
    Ok(MultiLaneProjection {
        v_proj: best.v_proj,
        chosen_lane: best.lane_id,
        horizon,
        speeding,
        lanes,
    })
}
