//! Projected attainable speed space (PASS): an instantaneous driving
//! efficiency metric for mandatory lane changes, plus the simulator,
//! calibration and comparison tooling around it.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod calibration;
pub mod error;
pub mod io;
pub mod maneuver;
pub mod metric;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod traj;

pub use baseline::{baseline_aggregate, baseline_instant, BaselineConfig, InstantMetric, RelativeSpacingBaseline};
pub use calibration::{
    event_loss, grid_search, rank_with_ties, spearman, total_loss, CalibrationResult, EventTraces, GridSpec,
    LossBreakdown, VehicleTrace,
};
pub use error::{Error, Result};
pub use io::RunConfig;
pub use pipeline::{compare, evaluate_event, EvalConfig, EventRecording, EventReport};
pub use maneuver::{catch_up_maneuver, v_proj_multi, ManeuverPhase, ManeuverResult, MultiLaneProjection};
pub use metric::{evaluate_series, PassConfig, PassSeries, SpaceTrace, REFERENCE_K1, REFERENCE_K2};
pub use traj::{
    build_snapshots, project_to_route, travel_time, EventWindow, LaneContext, LaneId, Obstacle, RouteMeta,
    SceneConfig, SceneSnapshot, TrajectoryRecord, VehicleTrack,
};
