use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Takes the first acceptable gap it reaches.
    EarlyMerge,
    /// Drives up to the front of the platoon and tries the first gap.
    LateMerge,
    /// Aims for a specific gap counted from the platoon leader.
    TargetGap,
    /// Slow, with conservative acceptance thresholds.
    Hesitant,
}

/// Parameters of the ego lane-change controller.
///
/// Gaps are indexed from the front: gap `k` lies between platoon vehicle `k`
/// and `k + 1`, so gap 0 is right behind the leader and gap `n` (for `n`
/// followers) is behind the last vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoPolicy {
    pub kind: PolicyKind,
    /// Desired cruising speed as a fraction of the speed limit.
    pub speed_factor: f64,
    /// Initial gap for [`PolicyKind::TargetGap`]; ignored otherwise.
    #[serde(default)]
    pub target_gap: usize,
    /// A gap whose center gets this close to the constraint is given up, m.
    pub commit_margin: f64,
    /// Minimum front and rear spacing for a lane change, m.
    pub gap_acceptance: f64,
    /// Signalling time before the lane change is executed, s.
    #[serde(default = "default_commit_delay")]
    pub commit_delay: f64,
    /// Time headway kept once in the target lane, s.
    pub headway: f64,
}

fn default_commit_delay() -> f64 {
    2.0
}

impl EgoPolicy {
    pub fn new(kind: PolicyKind) -> Self {
        let (speed_factor, commit_margin, gap_acceptance) = match kind {
            PolicyKind::EarlyMerge => (0.85, 80.0, 3.0),
            PolicyKind::LateMerge => (0.95, 15.0, 2.0),
            PolicyKind::TargetGap => (0.9, 30.0, 2.5),
            PolicyKind::Hesitant => (0.65, 100.0, 4.5),
        };
        Self {
            kind,
            speed_factor,
            target_gap: 2,
            commit_margin,
            gap_acceptance,
            commit_delay: default_commit_delay(),
            headway: 1.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.speed_factor > 0.0
            && self.speed_factor <= 1.0
            && self.commit_margin >= 0.0
            && self.gap_acceptance > 0.0
            && self.commit_delay >= 0.0
            && self.headway > 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid ego policy {self:?}")));
        }
        Ok(())
    }
}
