//! Rank agreement between aggregated PASS and travel time, and the grid
//! search over the utilization coefficients that maximizes it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::SpaceTrace;

/// Ascending ranks starting at 1; tied values share the mean of their positions.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i+1 ..= j share their average.
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman coefficient: Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "spearman inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least two observations, got {}",
            x.len()
        )));
    }
    spearman_ranked(&rank_with_ties(x), &rank_with_ties(y))
}

fn spearman_ranked(rx: &[f64], ry: &[f64]) -> Result<f64> {
    pearson(rx, ry).ok_or_else(|| Error::UndefinedCorrelation("constant input after ranking".into()))
}

/// Composite per-event loss: rewards strong positive rank agreement and
/// penalizes negative or weak agreement.
pub fn event_loss(r: f64) -> f64 {
    let r2 = r * r;
    let mut loss = 1.0 - r2;
    if r < 0.0 {
        loss += 10.0 * r.abs();
    }
    if r2 < 0.8 {
        loss += 10.0 * (0.8 - r2).powi(2);
    }
    loss
}

/// One vehicle's contribution: its travel time and coefficient-free trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleTrace {
    pub vehicle_id: String,
    pub travel_time: f64,
    pub trace: SpaceTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTraces {
    pub event_id: String,
    pub vehicles: Vec<VehicleTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRanking {
    pub vehicle_id: String,
    pub aggregate: f64,
    pub travel_time: f64,
    pub metric_rank: f64,
    pub travel_time_rank: f64,
}

/// Rank agreement within one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEvaluation {
    pub event_id: String,
    pub vehicles: Vec<VehicleRanking>,
    pub r: f64,
    pub r2: f64,
}

impl EventEvaluation {
    /// `entries` are `(vehicle_id, aggregate metric, travel time)`.
    pub fn new(event_id: impl Into<String>, entries: Vec<(String, f64, f64)>) -> Result<Self> {
        let event_id = event_id.into();
        if entries.len() < 2 {
            return Err(Error::UndefinedCorrelation(format!(
                "event {event_id} has {} ranked vehicles; at least two are needed",
                entries.len()
            )));
        }
        let metric: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let times: Vec<f64> = entries.iter().map(|e| e.2).collect();
        let metric_ranks = rank_with_ties(&metric);
        let time_ranks = rank_with_ties(&times);
        let r = spearman_ranked(&metric_ranks, &time_ranks)
            .map_err(|e| Error::UndefinedCorrelation(format!("event {event_id}: {e}")))?;
        let vehicles = entries
            .into_iter()
            .zip(metric_ranks.into_iter().zip(time_ranks))
            .map(|((vehicle_id, aggregate, travel_time), (mr, tr))| VehicleRanking {
                vehicle_id,
                aggregate,
                travel_time,
                metric_rank: mr,
                travel_time_rank: tr,
            })
            .collect();
        Ok(Self {
            event_id,
            vehicles,
            r,
            r2: r * r,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCorrelation {
    pub event_id: String,
    pub vehicles: usize,
    pub r: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub event_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub loss: f64,
    pub events: Vec<EventCorrelation>,
    pub excluded: Vec<Exclusion>,
}

impl LossBreakdown {
    pub fn mean_r2(&self) -> f64 {
        if self.events.is_empty() {
            return 0.0;
        }
        self.events.iter().map(|e| e.r2).sum::<f64>() / self.events.len() as f64
    }
}

fn score_event(event_id: &str, aggregates: &[f64], time_ranks: &[f64]) -> Result<EventCorrelation> {
    let r = spearman_ranked(&rank_with_ties(aggregates), time_ranks)
        .map_err(|e| Error::UndefinedCorrelation(format!("event {event_id}: {e}")))?;
    Ok(EventCorrelation {
        event_id: event_id.to_string(),
        vehicles: aggregates.len(),
        r,
        r2: r * r,
    })
}

fn check_event(event: &EventTraces) -> std::result::Result<(), String> {
    if event.vehicles.len() < 2 {
        return Err(format!("{} completed vehicles; need at least 2", event.vehicles.len()));
    }
    if let Some(v) = event.vehicles.iter().find(|v| v.trace.is_empty()) {
        return Err(format!("vehicle {} has no ticks in the window", v.vehicle_id));
    }
    let first = event.vehicles[0].travel_time;
    if event.vehicles.iter().all(|v| v.travel_time == first) {
        return Err("all travel times are equal".into());
    }
    Ok(())
}

/// Sum of event losses under `(k1, k2)`, rescoring each cached trace.
pub fn total_loss(k1: f64, k2: f64, events: &[EventTraces]) -> Result<LossBreakdown> {
    if !(k1 < 0.0 && 0.0 < k2) {
        return Err(Error::InvalidInput(format!("need k1 < 0 < k2, got ({k1}, {k2})")));
    }
    let mut out = LossBreakdown {
        loss: 0.0,
        events: Vec::new(),
        excluded: Vec::new(),
    };
    for event in events {
        if let Err(reason) = check_event(event) {
            out.excluded.push(Exclusion {
                event_id: event.event_id.clone(),
                reason,
            });
            continue;
        }
        let aggregates: Vec<f64> = event.vehicles.iter().map(|v| v.trace.mean_pass(k1, k2)).collect();
        let times: Vec<f64> = event.vehicles.iter().map(|v| v.travel_time).collect();
        match score_event(&event.event_id, &aggregates, &rank_with_ties(&times)) {
            Ok(c) => {
                out.loss += event_loss(c.r);
                out.events.push(c);
            }
            Err(e) => out.excluded.push(Exclusion {
                event_id: event.event_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub k1_range: [f64; 2],
    pub k2_range: [f64; 2],
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            k1_range: [-1.0, 0.0],
            k2_range: [0.0, 1.0],
            step: 0.01,
        }
    }
}

fn axis(range: [f64; 2], step: f64, keep: impl Fn(f64) -> bool) -> Vec<f64> {
    let lo = (range[0] / step - 1e-9).ceil() as i64;
    let hi = (range[1] / step + 1e-9).floor() as i64;
    (lo..=hi)
        .filter(|&i| i != 0)
        .map(|i| (i as f64 * step * 1e12).round() / 1e12)
        .filter(|&k| keep(k))
        .collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::Config(format!("grid step {} must be positive", self.step)));
        }
        if !(self.k1_range[0] <= self.k1_range[1] && self.k2_range[0] <= self.k2_range[1]) {
            return Err(Error::Config("grid ranges must be ordered [low, high]".into()));
        }
        if self.k1_values().is_empty() || self.k2_values().is_empty() {
            return Err(Error::Config(format!(
                "grid {self:?} has no points with k1 < 0 < k2"
            )));
        }
        Ok(())
    }

    /// Grid values of `k1`, excluding zero and anything non-negative.
    pub fn k1_values(&self) -> Vec<f64> {
        axis(self.k1_range, self.step, |k| k < 0.0)
    }

    pub fn k2_values(&self) -> Vec<f64> {
        axis(self.k2_range, self.step, |k| k > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub k1: f64,
    pub k2: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub k1: f64,
    pub k2: f64,
    pub loss: f64,
    pub mean_r2: f64,
    pub events: Vec<EventCorrelation>,
    pub excluded: Vec<Exclusion>,
    pub grid: Vec<GridPoint>,
}

/// Per-vehicle regime sums tabulated over the grid axes, so that the
/// aggregate at `(k1[i], k2[j])` is `(high[i] + low[j]) / ticks`.
struct RegimeTable {
    ticks: f64,
    high: Vec<f64>,
    low: Vec<f64>,
}

impl RegimeTable {
    fn new(trace: &SpaceTrace, k1s: &[f64], k2s: &[f64]) -> Self {
        Self {
            ticks: trace.len() as f64,
            high: k1s.iter().map(|&k| trace.regime_sums(k, 1.0).0).collect(),
            low: k2s.iter().map(|&k| trace.regime_sums(-1.0, k).1).collect(),
        }
    }

    fn aggregate(&self, i: usize, j: usize) -> f64 {
        (self.high[i] + self.low[j]) / self.ticks
    }
}

struct UsableEvent {
    time_ranks: Vec<f64>,
    tables: Vec<RegimeTable>,
}

/// Exhaustive search; ties in loss go to the smallest `|k1|`, then smallest `k2`.
pub fn grid_search(events: &[EventTraces], spec: &GridSpec) -> Result<CalibrationResult> {
    spec.validate()?;
    let k1s = spec.k1_values();
    let k2s = spec.k2_values();

    let mut excluded = Vec::new();
    let mut usable = Vec::new();
    for event in events {
        match check_event(event) {
            Ok(()) => usable.push(event),
            Err(reason) => {
                log::warn!("event {} excluded from calibration: {reason}", event.event_id);
                excluded.push(Exclusion {
                    event_id: event.event_id.clone(),
                    reason,
                });
            }
        }
    }
    if usable.is_empty() {
        return Err(Error::Calibration("no event has enough completed vehicles to rank".into()));
    }

    let prepared: Vec<UsableEvent> = usable
        .par_iter()
        .map(|event| {
            let times: Vec<f64> = event.vehicles.iter().map(|v| v.travel_time).collect();
            UsableEvent {
                time_ranks: rank_with_ties(&times),
                tables: event
                    .vehicles
                    .iter()
                    .map(|v| RegimeTable::new(&v.trace, &k1s, &k2s))
                    .collect(),
            }
        })
        .collect();

    let grid: Vec<GridPoint> = (0..k1s.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let prepared = &prepared;
            let k2s = &k2s;
            let k1 = k1s[i];
            (0..k2s.len()).map(move |j| {
                let mut aggregates = Vec::new();
                let loss = prepared
                    .iter()
                    .map(|ev| {
                        aggregates.clear();
                        aggregates.extend(ev.tables.iter().map(|t| t.aggregate(i, j)));
                        // An undefined correlation drops the event, as in `total_loss`.
                        spearman_ranked(&rank_with_ties(&aggregates), &ev.time_ranks)
                            .map_or(0.0, event_loss)
                    })
                    .sum();
                GridPoint { k1, k2: k2s[j], loss }
            })
        })
        .collect();

    let best = grid
        .iter()
        .min_by(|a, b| {
            a.loss
                .total_cmp(&b.loss)
                .then_with(|| a.k1.abs().total_cmp(&b.k1.abs()))
                .then_with(|| a.k2.total_cmp(&b.k2))
        })
        .copied()
        .expect("grid is non-empty");

    let at_best = total_loss(best.k1, best.k2, events)?;
    Ok(CalibrationResult {
        k1: best.k1,
        k2: best.k2,
        loss: best.loss,
        mean_r2: at_best.mean_r2(),
        events: at_best.events,
        excluded,
        grid,
    })
}
