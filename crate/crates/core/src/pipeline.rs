//! From recorded trajectories to per-event rankings and calibration traces.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{baseline_instant, BaselineConfig};
use crate::calibration::{EventEvaluation, EventTraces, VehicleTrace};
use crate::error::{Error, Result};
use crate::metric::{evaluate_series, mean, PassConfig, PassSeries, SpaceTrace};
use crate::sim::{Dataset, EventData};
use crate::traj::{
    build_snapshots, travel_time, window_ticks, EventWindow, Obstacle, RouteMeta, SceneConfig, VehicleTrack,
};

/// One evaluated vehicle and the traffic it was recorded with.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub ego: VehicleTrack,
    pub others: Vec<VehicleTrack>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecording {
    pub window: EventWindow,
    pub route: RouteMeta,
    pub obstacles: Vec<Obstacle>,
    pub subjects: Vec<Subject>,
}

impl From<&EventData> for EventRecording {
    fn from(event: &EventData) -> Self {
        Self {
            window: event.window.clone(),
            route: event.route.clone(),
            obstacles: event.obstacles.clone(),
            subjects: event
                .runs
                .iter()
                .map(|r| Subject {
                    ego: r.ego.clone(),
                    others: r.others.clone(),
                })
                .collect(),
        }
    }
}

pub fn recordings(dataset: &Dataset) -> Vec<EventRecording> {
    dataset.events.iter().map(EventRecording::from).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub pass: PassConfig,
    pub baseline: BaselineConfig,
    pub scene: SceneConfig,
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.pass.validate()?;
        self.baseline.validate()?;
        self.scene.validate()
    }
}

/// Both metrics over the window ticks of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleEvaluation {
    pub vehicle_id: String,
    pub travel_time: f64,
    pub series: PassSeries,
    pub baseline: Vec<f64>,
    pub pass_mean: f64,
    pub baseline_mean: f64,
}

impl VehicleEvaluation {
    pub fn trace(&self) -> VehicleTrace {
        VehicleTrace {
            vehicle_id: self.vehicle_id.clone(),
            travel_time: self.travel_time,
            trace: SpaceTrace::from_available(self.series.available.clone()),
        }
    }
}

pub fn evaluate_vehicle(
    subject: &Subject,
    window: &EventWindow,
    route: &RouteMeta,
    obstacles: &[Obstacle],
    cfg: &EvalConfig,
) -> Result<VehicleEvaluation> {
    let tt = travel_time(&subject.ego, window)?;
    let ticks = window_ticks(&subject.ego, window)?;
    if ticks.is_empty() {
        return Err(Error::InvalidInput(format!(
            "vehicle {} has no samples inside window {}",
            subject.ego.id(),
            window.event_id
        )));
    }
    let clipped = VehicleTrack::new(subject.ego.id(), subject.ego.records()[ticks].to_vec())?;
    let snapshots = build_snapshots(&clipped, &subject.others, obstacles, route, &cfg.scene)?;
    let series = evaluate_series(&snapshots, &cfg.pass)?;
    let baseline: Vec<f64> = snapshots.iter().map(|s| baseline_instant(s, &cfg.baseline)).collect();
    Ok(VehicleEvaluation {
        vehicle_id: subject.ego.id().to_string(),
        travel_time: tt,
        pass_mean: series.mean,
        baseline_mean: mean(&baseline)?,
        series,
        baseline,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub vehicle_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub event_id: String,
    pub vehicles: Vec<VehicleEvaluation>,
    pub skipped: Vec<Skipped>,
    /// `None` when the rank correlation is undefined for this event.
    pub pass: Option<EventEvaluation>,
    pub baseline: Option<EventEvaluation>,
}

impl EventReport {
    pub fn traces(&self) -> EventTraces {
        EventTraces {
            event_id: self.event_id.clone(),
            vehicles: self.vehicles.iter().map(VehicleEvaluation::trace).collect(),
        }
    }
}

/// Evaluates every subject. Vehicles that never complete the window are
/// skipped with a warning; any other failure aborts.
pub fn evaluate_event(event: &EventRecording, cfg: &EvalConfig) -> Result<EventReport> {
    cfg.validate()?;
    event.window.validate()?;
    let results: Vec<_> = event
        .subjects
        .par_iter()
        .map(|s| (s.ego.id().to_string(), evaluate_vehicle(s, &event.window, &event.route, &event.obstacles, cfg)))
        .collect();
    let mut vehicles = Vec::new();
    let mut skipped = Vec::new();
    for (vehicle_id, result) in results {
        match result {
            Ok(v) => vehicles.push(v),
            Err(e @ Error::IncompleteTravel { .. }) => {
                warn!("{e}; skipping");
                skipped.push(Skipped {
                    vehicle_id,
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let event_id = event.window.event_id.clone();
    let rank = |metric: fn(&VehicleEvaluation) -> f64| {
        let entries = vehicles
            .iter()
            .map(|v| (v.vehicle_id.clone(), metric(v), v.travel_time))
            .collect();
        match EventEvaluation::new(event_id.clone(), entries) {
            Ok(e) => Some(e),
            Err(e) => {
                warn!("{e}");
                None
            }
        }
    };
    let pass = rank(|v| v.pass_mean);
    let baseline = rank(|v| v.baseline_mean);
    Ok(EventReport {
        event_id,
        vehicles,
        skipped,
        pass,
        baseline,
    })
}

pub fn evaluate_all(events: &[EventRecording], cfg: &EvalConfig) -> Result<Vec<EventReport>> {
    events.iter().map(|e| evaluate_event(e, cfg)).collect()
}

fn mean_r2(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-event and mean R^2 of both metrics over the same events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub events: Vec<ComparedEvent>,
    pub pass_mean_r2: f64,
    pub baseline_mean_r2: f64,
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparedEvent {
    pub event_id: String,
    pub vehicles: usize,
    pub pass_r: f64,
    pub pass_r2: f64,
    pub baseline_r: f64,
    pub baseline_r2: f64,
}

/// Only events where both correlations are defined take part, so the two
/// means are over the same set.
pub fn compare(reports: &[EventReport]) -> Result<Comparison> {
    let mut events = Vec::new();
    let mut excluded = Vec::new();
    for r in reports {
        match (&r.pass, &r.baseline) {
            (Some(p), Some(b)) => events.push(ComparedEvent {
                event_id: r.event_id.clone(),
                vehicles: r.vehicles.len(),
                pass_r: p.r,
                pass_r2: p.r2,
                baseline_r: b.r,
                baseline_r2: b.r2,
            }),
            _ => excluded.push(r.event_id.clone()),
        }
    }
    let pass_mean_r2 = mean_r2(events.iter().map(|e| e.pass_r2))
        .ok_or_else(|| Error::UndefinedCorrelation("no event has a defined correlation for both metrics".into()))?;
    let baseline_mean_r2 = mean_r2(events.iter().map(|e| e.baseline_r2)).unwrap_or(0.0);
    Ok(Comparison {
        events,
        pass_mean_r2,
        baseline_mean_r2,
        excluded,
    })
}
