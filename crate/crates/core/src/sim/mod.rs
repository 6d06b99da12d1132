//! Deterministic two-lane simulator for mandatory lane changes: an ego whose
//! lane ends has to merge into a platoon that follows a slowly oscillating
//! leader.

pub mod cohort;
pub mod idm;
pub mod policy;
pub mod presets;
pub mod scenario;
pub mod world;

pub use cohort::{generate_cohort, Dataset, EventData, RunRecord, RunSummary};
pub use idm::{idm_accel, lead_speed, IdmParams, LeadProfile};
pub use policy::{EgoPolicy, PolicyKind};
pub use scenario::{MergeResistance, PlatoonSpec, ScenarioKind, ScenarioSpec};
pub use world::{run_event, EgoPhase, MergeStats, RunOutput, Vehicle, World};
