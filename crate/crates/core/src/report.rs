//! Serializable report documents and the human-readable summary.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationResult, EventCorrelation, Exclusion, GridSpec};
use crate::metric::{REFERENCE_K1, REFERENCE_K2};
use crate::pipeline::{Comparison, EventReport, Skipped};

/// Figures from the original human-subject study. Carried as annotations
/// only; nothing in this crate reproduces them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub note: String,
    pub pass_mean_r2: f64,
    pub baseline_mean_r2: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for Reference {
    fn default() -> Self {
        Self {
            note: "original data, not reproduced".into(),
            pass_mean_r2: 0.913,
            baseline_mean_r2: 0.269,
            k1: REFERENCE_K1,
            k2: REFERENCE_K2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRow {
    pub vehicle_id: String,
    pub travel_time: f64,
    pub travel_time_rank: f64,
    pub pass: f64,
    pub pass_rank: Option<f64>,
    pub baseline: f64,
    pub baseline_rank: Option<f64>,
    pub speeding_ticks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub event_id: String,
    pub vehicles: Vec<VehicleRow>,
    pub skipped: Vec<Skipped>,
    pub pass_r: Option<f64>,
    pub pass_r2: Option<f64>,
    pub baseline_r: Option<f64>,
    pub baseline_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub k1: f64,
    pub k2: f64,
    pub events: Vec<EventRow>,
    pub pass_mean_r2: Option<f64>,
    pub baseline_mean_r2: Option<f64>,
    pub warnings: Vec<String>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

impl EvaluationReport {
    pub fn new(k1: f64, k2: f64, reports: &[EventReport]) -> Self {
        let mut warnings = Vec::new();
        let events: Vec<EventRow> = reports
            .iter()
            .map(|r| {
                for s in &r.skipped {
                    warnings.push(format!("event {}: skipped {}: {}", r.event_id, s.vehicle_id, s.reason));
                }
                if r.pass.is_none() || r.baseline.is_none() {
                    warnings.push(format!("event {}: rank correlation undefined", r.event_id));
                }
                let vehicles = r
                    .vehicles
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        if v.series.speeding_ticks > 0 {
                            warnings.push(format!(
                                "event {}: {} above the speed limit for {} ticks",
                                r.event_id, v.vehicle_id, v.series.speeding_ticks
                            ));
                        }
                        let rank = |e: &Option<crate::calibration::EventEvaluation>| {
                            e.as_ref().map(|e| e.vehicles[i].metric_rank)
                        };
                        VehicleRow {
                            vehicle_id: v.vehicle_id.clone(),
                            travel_time: v.travel_time,
                            travel_time_rank: r
                                .pass
                                .as_ref()
                                .map_or(f64::NAN, |e| e.vehicles[i].travel_time_rank),
                            pass: v.pass_mean,
                            pass_rank: rank(&r.pass),
                            baseline: v.baseline_mean,
                            baseline_rank: rank(&r.baseline),
                            speeding_ticks: v.series.speeding_ticks,
                        }
                    })
                    .collect();
                EventRow {
                    event_id: r.event_id.clone(),
                    vehicles,
                    skipped: r.skipped.clone(),
                    pass_r: r.pass.as_ref().map(|e| e.r),
                    pass_r2: r.pass.as_ref().map(|e| e.r2),
                    baseline_r: r.baseline.as_ref().map(|e| e.r),
                    baseline_r2: r.baseline.as_ref().map(|e| e.r2),
                }
            })
            .collect();
        let pass: Vec<f64> = events.iter().filter_map(|e| e.pass_r2).collect();
        let base: Vec<f64> = events.iter().filter_map(|e| e.baseline_r2).collect();
        Self {
            k1,
            k2,
            pass_mean_r2: mean(&pass),
            baseline_mean_r2: mean(&base),
            events,
            warnings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub k1: f64,
    pub k2: f64,
    pub loss: f64,
    pub mean_r2: f64,
    pub events: Vec<EventCorrelation>,
    pub excluded: Vec<Exclusion>,
    pub grid: GridSpec,
    pub grid_points: usize,
    pub reference: Reference,
}

impl CalibrationReport {
    pub fn new(result: &CalibrationResult, grid: GridSpec) -> Self {
        Self {
            k1: result.k1,
            k2: result.k2,
            loss: result.loss,
            mean_r2: result.mean_r2,
            events: result.events.clone(),
            excluded: result.excluded.clone(),
            grid,
            grid_points: result.grid.len(),
            reference: Reference::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub k1: f64,
    pub k2: f64,
    #[serde(flatten)]
    pub comparison: Comparison,
    pub scatter_rows: usize,
    pub reference: Reference,
}

/// What `report` consolidates; any part may be missing if its command was not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub calibration: Option<CalibrationReport>,
    pub comparison: Option<ComparisonReport>,
    pub evaluation: Option<EvaluationReport>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "PASS summary");
        let _ = writeln!(out, "============");
        if let Some(c) = &self.calibration {
            let _ = writeln!(
                out,
                "calibrated k1 = {:.2}, k2 = {:.2} (loss {:.4}, mean rank-R2 {:.3}, {} grid points)",
                c.k1, c.k2, c.loss, c.mean_r2, c.grid_points
            );
            for e in &c.excluded {
                let _ = writeln!(out, "  excluded {}: {}", e.event_id, e.reason);
            }
        }
        if let Some(c) = &self.comparison {
            let cmp = &c.comparison;
            let _ = writeln!(out, "\nmean rank-R2 at k1 = {:.3}, k2 = {:.3}", c.k1, c.k2);
            let _ = writeln!(out, "  PASS      {:.3}", cmp.pass_mean_r2);
            let _ = writeln!(out, "  baseline  {:.3}", cmp.baseline_mean_r2);
            let _ = writeln!(
                out,
                "  (reference: {:.3} vs {:.3}, {})",
                c.reference.pass_mean_r2, c.reference.baseline_mean_r2, c.reference.note
            );
            let _ = writeln!(out, "\n{:<10} {:>4} {:>8} {:>8} {:>8} {:>8}", "event", "n", "PASS r", "R2", "base r", "R2");
            for e in &cmp.events {
                let _ = writeln!(
                    out,
                    "{:<10} {:>4} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
                    e.event_id, e.vehicles, e.pass_r, e.pass_r2, e.baseline_r, e.baseline_r2
                );
            }
        } else if let Some(ev) = &self.evaluation {
            let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"));
            let _ = writeln!(out, "\nmean rank-R2 at k1 = {:.3}, k2 = {:.3}", ev.k1, ev.k2);
            let _ = writeln!(out, "  PASS      {}", fmt(ev.pass_mean_r2));
            let _ = writeln!(out, "  baseline  {}", fmt(ev.baseline_mean_r2));
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(out, "\n{} warning(s):", self.warnings.len());
            for w in &self.warnings {
                let _ = writeln!(out, "  - {w}");
            }
        }
        out
    }
}
