//! Reference instantaneous metric built from the current lane only.
//!
//! Scores in `[0, 1]`, higher meaning less efficient: the speed deficit of
//! whatever is ahead in the ego lane, relative to the limit, damped by how
//! far away it is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traj::SceneSnapshot;

/// Something that scores one snapshot. Lets alternative baselines be swapped in.
pub trait InstantMetric {
    fn name(&self) -> &str;
    fn evaluate(&self, snapshot: &SceneSnapshot) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Spacing scale of the exponential damping, m.
    pub d_ref: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { d_ref: 50.0 }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_ref > 0.0) {
            return Err(Error::Config(format!("baseline d_ref = {} must be positive", self.d_ref)));
        }
        Ok(())
    }
}

fn score(v_limit: f64, v_ahead: f64, gap: f64, d_ref: f64) -> f64 {
    let deficit = ((v_limit - v_ahead) / v_limit).clamp(0.0, 1.0);
    deficit * (-gap / d_ref).exp()
}

pub fn baseline_instant(snapshot: &SceneSnapshot, cfg: &BaselineConfig) -> f64 {
    let Some(lane) = snapshot.lane(snapshot.ego_lane) else {
        return 0.0;
    };
    let v_limit = snapshot.speed_limit;
    let leader = lane.leader.map_or(0.0, |l| score(v_limit, l.speed, l.gap, cfg.d_ref));
    let obstacle = lane.obstacle_gap.map_or(0.0, |g| score(v_limit, 0.0, g, cfg.d_ref));
    leader.max(obstacle)
}

pub fn baseline_aggregate(values: &[f64]) -> Result<f64> {
    crate::metric::mean(values)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RelativeSpacingBaseline(pub BaselineConfig);

impl InstantMetric for RelativeSpacingBaseline {
    fn name(&self) -> &str {
        "baseline"
    }

    fn evaluate(&self, snapshot: &SceneSnapshot) -> f64 {
        baseline_instant(snapshot, &self.0)
    }
}
