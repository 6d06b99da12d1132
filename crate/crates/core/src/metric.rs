//! Available acceleration space, its utilization, and the PASS score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maneuver::v_proj_multi;
use crate::traj::{LaneId, SceneSnapshot, DEFAULT_DT};

/// Response coefficients obtained on the original driving-simulator data.
/// Used as defaults until a calibration is supplied.
pub const REFERENCE_K1: f64 = -0.417;
pub const REFERENCE_K2: f64 = 0.700;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PassConfig {
    /// Catch-up acceleration, m/s^2.
    pub a1: f64,
    /// Catch-up deceleration, m/s^2 (negative).
    pub a2: f64,
    /// Utilization scaling when the ego is at or above the reference speed.
    pub k1: f64,
    /// Utilization scaling when the ego is below the reference speed.
    pub k2: f64,
    /// Averaging horizon for a free lane evaluated on its own, s.
    pub free_lane_horizon: f64,
    pub gap_epsilon: f64,
    pub speed_epsilon: f64,
    pub dt: f64,
}

impl Default for PassConfig {
    fn default() -> Self {
        Self {
            a1: 1.5,
            a2: -1.5,
            k1: REFERENCE_K1,
            k2: REFERENCE_K2,
            free_lane_horizon: 30.0,
            gap_epsilon: 0.01,
            speed_epsilon: 0.01,
            dt: DEFAULT_DT,
        }
    }
}

impl PassConfig {
    pub fn with_k(self, k1: f64, k2: f64) -> Self {
        Self { k1, k2, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.a1 > 0.0) {
            problems.push(format!("a1 = {} must be positive", self.a1));
        }
        if !(self.a2 < 0.0) {
            problems.push(format!("a2 = {} must be negative", self.a2));
        }
        if !(self.k1 < 0.0 && 0.0 < self.k2) {
            problems.push(format!("need k1 < 0 < k2, got k1 = {}, k2 = {}", self.k1, self.k2));
        }
        if !(self.free_lane_horizon > 0.0) {
            problems.push(format!("free_lane_horizon = {} must be positive", self.free_lane_horizon));
        }
        if !(self.gap_epsilon >= 0.0 && self.speed_epsilon >= 0.0) {
            problems.push("epsilons must be non-negative".into());
        }
        if !(self.dt > 0.0) {
            problems.push(format!("dt = {} must be positive", self.dt));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

pub fn available_space(v_proj: f64, v0: f64) -> f64 {
    v_proj - v0
}

/// Scaled change of available space; the regime is chosen by the current value.
pub fn utilization(a_t: f64, a_prev: f64, k1: f64, k2: f64) -> f64 {
    scale_change(a_t, a_t - a_prev, k1, k2)
}

#[inline]
pub fn scale_change(a_t: f64, delta: f64, k1: f64, k2: f64) -> f64 {
    if a_t <= 0.0 {
        k1 * delta
    } else {
        k2 * delta
    }
}

/// `tanh(x) + 1`, written as a logistic so it stays positive for large negative `x`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    2.0 / (1.0 + (-2.0 * x).exp())
}

pub fn pass_instant(a_t: f64, scaled_change: f64) -> f64 {
    a_t * bracket(scaled_change)
}

/// Per-tick metric trace aligned with the input snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassSeries {
    pub time: Vec<f64>,
    pub ego_lane: Vec<LaneId>,
    pub v0: Vec<f64>,
    pub v_proj: Vec<f64>,
    pub chosen_lane: Vec<LaneId>,
    pub available: Vec<f64>,
    pub delta: Vec<f64>,
    pub scaled: Vec<f64>,
    pub pass: Vec<f64>,
    pub mean: f64,
    /// Ticks at which the ego was above the speed limit.
    pub speeding_ticks: usize,
}

impl PassSeries {
    pub fn len(&self) -> usize {
        self.pass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pass.is_empty()
    }
}

/// The coefficient-independent part of a series: available space and its
/// per-tick change. Rescoring under new coefficients only needs this.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpaceTrace {
    pub available: Vec<f64>,
    pub delta: Vec<f64>,
}

impl SpaceTrace {
    pub fn from_available(available: Vec<f64>) -> Self {
        let delta = std::iter::once(0.0)
            .chain(available.windows(2).map(|w| w[1] - w[0]))
            .collect();
        Self { available, delta }
    }

    pub fn len(&self) -> usize {
        self.available.len()
    }

    pub fn is_empty(&self) -> bool {
        self.available.is_empty()
    }

    /// Time-aggregated PASS under `(k1, k2)`.
    pub fn mean_pass(&self, k1: f64, k2: f64) -> f64 {
        let total: f64 = self
            .available
            .iter()
            .zip(&self.delta)
            .map(|(&a, &d)| pass_instant(a, scale_change(a, d, k1, k2)))
            .sum();
        total / self.available.len() as f64
    }

    /// Sums of PASS over the high-efficiency (`A <= 0`) and low-efficiency
    /// ticks separately; each depends on only one coefficient.
    pub fn regime_sums(&self, k1: f64, k2: f64) -> (f64, f64) {
        let mut high = 0.0;
        let mut low = 0.0;
        for (&a, &d) in self.available.iter().zip(&self.delta) {
            if a <= 0.0 {
                high += a * bracket(k1 * d);
            } else {
                low += a * bracket(k2 * d);
            }
        }
        (high, low)
    }
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot average an empty series".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-tick pipeline over time-ordered snapshots. The first tick has no
/// predecessor and gets a zero change.
pub fn evaluate_series(snapshots: &[SceneSnapshot], cfg: &PassConfig) -> Result<PassSeries> {
    cfg.validate()?;
    if snapshots.is_empty() {
        return Err(Error::InvalidInput("no snapshots to evaluate".into()));
    }
    if let Some(i) = snapshots.windows(2).position(|w| w[1].time <= w[0].time) {
        return Err(Error::InvalidInput(format!(
            "snapshots not time-ordered at index {}",
            i + 1
        )));
    }
    let n = snapshots.len();
    let mut s = PassSeries {
        time: Vec::with_capacity(n),
        ego_lane: Vec::with_capacity(n),
        v0: Vec::with_capacity(n),
        v_proj: Vec::with_capacity(n),
        chosen_lane: Vec::with_capacity(n),
        available: Vec::with_capacity(n),
        delta: Vec::with_capacity(n),
        scaled: Vec::with_capacity(n),
        pass: Vec::with_capacity(n),
        mean: 0.0,
        speeding_ticks: 0,
    };
    let mut prev = None;
    for snap in snapshots {
        snap.validate()?;
        let proj = v_proj_multi(snap, cfg)?;
        let a_t = available_space(proj.v_proj, snap.ego_speed);
        let delta = prev.map_or(0.0, |p| a_t - p);
        let scaled = scale_change(a_t, delta, cfg.k1, cfg.k2);
        s.time.push(snap.time);
        s.ego_lane.push(snap.ego_lane);
        s.v0.push(snap.ego_speed);
        s.v_proj.push(proj.v_proj);
        s.chosen_lane.push(proj.chosen_lane);
        s.available.push(a_t);
        s.delta.push(delta);
        s.scaled.push(scaled);
        s.pass.push(pass_instant(a_t, scaled));
        s.speeding_ticks += usize::from(proj.speeding);
        prev = Some(a_t);
    }
    s.mean = mean(&s.pass)?;
    Ok(s)
}
