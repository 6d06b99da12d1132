use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdmParams {
    pub desired_speed: f64,
    /// Standstill spacing, m.
    pub min_gap: f64,
    /// Desired time headway, s.
    pub headway: f64,
    pub max_accel: f64,
    pub comfortable_decel: f64,
    pub exponent: f64,
    /// Hard floor on the commanded acceleration (negative).
    pub accel_floor: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            desired_speed: 15.0,
            min_gap: 2.0,
            headway: 1.5,
            max_accel: 1.5,
            comfortable_decel: 2.0,
            exponent: 4.0,
            accel_floor: -8.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.desired_speed,
            self.min_gap,
            self.headway,
            self.max_accel,
            self.comfortable_decel,
            self.exponent,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.accel_floor < 0.0) {
            return Err(Error::Config(format!("invalid IDM parameters {self:?}")));
        }
        Ok(())
    }

    /// Steady-state spacing when following at speed `v`.
    pub fn equilibrium_gap(&self, v: f64) -> f64 {
        let free = 1.0 - (v / self.desired_speed).powf(self.exponent);
        (self.min_gap + v * self.headway) / free.max(1e-6).sqrt()
    }
}

/// Free-road term only, for a vehicle with nothing ahead.
pub fn idm_free_accel(v: f64, p: &IdmParams) -> f64 {
    (p.max_accel * (1.0 - (v / p.desired_speed).powf(p.exponent))).max(p.accel_floor)
}

/// Intelligent Driver Model acceleration. `dv` is the approach rate
/// (own speed minus leader speed); `gap` is bumper to bumper.
pub fn idm_accel(v: f64, gap: f64, dv: f64, p: &IdmParams) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::InvalidInput(format!("IDM needs a positive gap, got {gap}")));
    }
    let s_star = p.min_gap
        + (v * p.headway + v * dv / (2.0 * (p.max_accel * p.comfortable_decel).sqrt())).max(0.0);
    let a = p.max_accel * (1.0 - (v / p.desired_speed).powf(p.exponent) - (s_star / gap).powi(2));
    Ok(a.max(p.accel_floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadProfile {
    pub base_speed: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl Default for LeadProfile {
    fn default() -> Self {
        Self {
            base_speed: 8.0,
            amplitude: 1.5,
            period: 40.0,
        }
    }
}

impl LeadProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_speed - self.amplitude.abs() > 0.0) || !(self.period > 0.0) {
            return Err(Error::Config(format!(
                "lead profile {self:?} must stay above zero speed with a positive period"
            )));
        }
        Ok(())
    }
}

pub fn lead_speed(t: f64, profile: &LeadProfile) -> f64 {
    profile.base_speed + profile.amplitude * (std::f64::consts::TAU * t / profile.period).sin()
}
