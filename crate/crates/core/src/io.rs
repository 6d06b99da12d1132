//! File formats: trajectory CSV, per-tick metric CSV, grid and scatter dumps,
//! the event manifest, and the TOML run configuration.
//!
//! Floats are written with at most 9 significant digits; reading a file back
//! reproduces in-memory values to that precision.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineConfig;
use crate::calibration::{GridPoint, GridSpec};
use crate::error::{Error, Result};
use crate::metric::PassConfig;
use crate::pipeline::{EvalConfig, EventRecording, EventReport, Subject};
use crate::sim::{Dataset, EgoPolicy, MergeStats, ScenarioSpec};
use crate::traj::{EventWindow, LaneId, Obstacle, Route, RouteMeta, SceneConfig, TrajectoryRecord, VehicleTrack};

pub const TRAJECTORY_HEADER: [&str; 6] = ["vehicle_id", "time", "lane_id", "s", "speed", "accel"];
/// Planar variant; positions are projected onto the route polyline on read.
pub const PLANAR_TRAJECTORY_HEADER: [&str; 7] = ["vehicle_id", "time", "lane_id", "x", "y", "speed", "accel"];
pub const TICK_HEADER: [&str; 11] = [
    "vehicle_id",
    "time",
    "lane_id",
    "v0",
    "v_proj",
    "chosen_lane",
    "A",
    "dA",
    "dA_scaled",
    "pass",
    "baseline",
];
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Shortest decimal text of `x` rounded to 9 significant digits.
pub fn fmt_f64(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        "0".to_string()
    } else {
        rounded.to_string()
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    create_parent(path)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_tracks<W: Write>(writer: W, tracks: &[&VehicleTrack]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for track in tracks {
        for r in track.records() {
            w.write_record([
                track.id().to_string(),
                fmt_f64(r.time),
                r.lane_id.to_string(),
                fmt_f64(r.s),
                fmt_f64(r.speed),
                fmt_f64(r.accel),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_tracks_file(path: &Path, tracks: &[&VehicleTrack]) -> Result<()> {
    create_parent(path)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_tracks(std::io::BufWriter::new(file), tracks)
}

enum Layout {
    Route,
    Planar,
}

/// Reads a trajectory CSV. Tracks come back in order of first appearance.
/// Planar files need `route` to project onto.
pub fn read_tracks(path: &Path, route: Option<&Route>) -> Result<Vec<VehicleTrack>> {
    let display = path.display().to_string();
    let schema = |row: usize, reason: String| Error::Schema {
        path: display.clone(),
        row,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => schema(1, format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| schema(1, e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let layout = if names == TRAJECTORY_HEADER {
        Layout::Route
    } else if names == PLANAR_TRAJECTORY_HEADER {
        if route.is_none() {
            return Err(schema(1, "planar (x, y) columns need a route polyline in the manifest".into()));
        }
        Layout::Planar
    } else {
        return Err(schema(
            1,
            format!(
                "unexpected header {:?}; expected {:?} or {:?}",
                names, TRAJECTORY_HEADER, PLANAR_TRAJECTORY_HEADER
            ),
        ));
    };

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<TrajectoryRecord>> = HashMap::new();
    for (i, result) in reader.records().enumerate() {
        // Header is row 1.
        let row = i + 2;
        let rec = result.map_err(|e| schema(row, e.to_string()))?;
        let field = |j: usize| rec.get(j).map(str::trim).unwrap_or("");
        let num = |j: usize| -> Result<f64> {
            let text = field(j);
            let v: f64 = text
                .parse()
                .map_err(|_| schema(row, format!("column {}: cannot parse {text:?} as a number", headers[j].trim())))?;
            if !v.is_finite() {
                return Err(schema(row, format!("column {}: non-finite value", headers[j].trim())));
            }
            Ok(v)
        };
        let id = field(0).to_string();
        if id.is_empty() {
            return Err(schema(row, "empty vehicle_id".into()));
        }
        let time = num(1)?;
        let lane_id: LaneId = field(2)
            .parse()
            .map_err(|_| schema(row, format!("column lane_id: cannot parse {:?} as an integer", field(2))))?;
        let (s, speed, accel) = match layout {
            Layout::Route => (num(3)?, num(4)?, num(5)?),
            Layout::Planar => {
                let route = route.expect("checked above");
                let s = route
                    .project(num(3)?, num(4)?, crate::traj::DEFAULT_LATERAL_TOLERANCE)
                    .map_err(|e| schema(row, e.to_string()))?;
                (s, num(5)?, num(6)?)
            }
        };
        if time < 0.0 {
            return Err(schema(row, format!("negative time {time}")));
        }
        if speed < 0.0 {
            return Err(schema(row, format!("negative speed {speed}")));
        }
        let track = rows.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Vec::new()
        });
        if let Some(prev) = track.last() {
            if time <= prev.time {
                return Err(schema(row, format!("vehicle {id}: time {time} does not increase")));
            }
        }
        track.push(TrajectoryRecord {
            time,
            lane_id,
            s,
            speed,
            accel,
        });
    }
    if order.is_empty() {
        return Err(schema(2, "file has no trajectory rows".into()));
    }
    order
        .into_iter()
        .map(|id| {
            let recs = rows.remove(&id).expect("id recorded");
            VehicleTrack::new(id, recs)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    /// Id of the evaluated (ego) vehicle inside `file`.
    pub vehicle_id: String,
    /// Trajectory CSV, relative to the manifest directory.
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<EgoPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<MergeStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEvent {
    pub event_id: String,
    pub window: EventWindow,
    pub route: RouteMeta,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platoon_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    pub runs: Vec<ManifestRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub events: Vec<ManifestEvent>,
}

/// Writes one CSV per run (ego first, then its platoon) plus the manifest.
pub fn write_dataset(dataset: &Dataset, dir: &Path, seed: u64, preset: Option<&str>) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut events = Vec::with_capacity(dataset.events.len());
    for event in &dataset.events {
        let id = &event.spec.event_id;
        let mut runs = Vec::with_capacity(event.runs.len());
        for run in &event.runs {
            let file = format!("{id}/{}.csv", run.run_id);
            let mut tracks = vec![&run.ego];
            tracks.extend(run.others.iter());
            write_tracks_file(&dir.join(&file), &tracks)?;
            runs.push(ManifestRun {
                vehicle_id: run.run_id.clone(),
                file,
                seed: Some(run.seed),
                policy: Some(run.policy.clone()),
                completed: Some(run.completed),
                stats: Some(run.stats),
            });
        }
        events.push(ManifestEvent {
            event_id: id.clone(),
            window: event.window.clone(),
            route: event.route.clone(),
            obstacles: event.obstacles.clone(),
            platoon_seed: Some(event.spec.platoon_seed),
            scenario: Some(event.spec.clone()),
            runs,
        });
    }
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        seed: Some(seed),
        preset: preset.map(str::to_string),
        events,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Accepts either a dataset directory or the manifest file itself.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let path = manifest_path(path);
    if !path.exists() {
        return Err(Error::Config(format!("no dataset manifest at {}", path.display())));
    }
    let manifest: Manifest = read_json(&path)?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported manifest version {} (expected {MANIFEST_VERSION})",
            path.display(),
            manifest.format_version
        )));
    }
    for (i, e) in manifest.events.iter().enumerate() {
        if manifest.events[..i].iter().any(|o| o.event_id == e.event_id) {
            return Err(Error::Config(format!("duplicate event id {} in manifest", e.event_id)));
        }
        e.window.validate()?;
        e.route.validate()?;
    }
    Ok(manifest)
}

/// Loads every event of a dataset. Each run file holds the evaluated vehicle
/// and the traffic recorded with it.
pub fn read_dataset(path: &Path) -> Result<Vec<EventRecording>> {
    let manifest_file = manifest_path(path);
    let manifest = read_manifest(&manifest_file)?;
    let root = manifest_file.parent().map(Path::to_path_buf).unwrap_or_default();
    if manifest.events.is_empty() {
        return Err(Error::InvalidInput(format!("dataset {} contains no events", root.display())));
    }
    manifest
        .events
        .iter()
        .map(|event| {
            let route = event.route.polyline.clone().map(Route::new).transpose()?;
            let mut subjects = Vec::with_capacity(event.runs.len());
            for run in &event.runs {
                let file = root.join(&run.file);
                let mut tracks = read_tracks(&file, route.as_ref())?;
                let pos = tracks.iter().position(|t| t.id() == run.vehicle_id).ok_or_else(|| {
                    Error::Config(format!("{}: vehicle {} not found", file.display(), run.vehicle_id))
                })?;
                let ego = tracks.remove(pos);
                subjects.push(Subject { ego, others: tracks });
            }
            let mut window = event.window.clone();
            if window.vehicle_ids.is_empty() {
                window.vehicle_ids = event.runs.iter().map(|r| r.vehicle_id.clone()).collect();
            }
            Ok(EventRecording {
                window,
                route: event.route.clone(),
                obstacles: event.obstacles.clone(),
                subjects,
            })
        })
        .collect()
}

/// Per-tick trace of every evaluated vehicle of one event.
pub fn write_ticks(path: &Path, report: &EventReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TICK_HEADER)?;
    for v in &report.vehicles {
        let s = &v.series;
        for i in 0..s.len() {
            w.write_record([
                v.vehicle_id.clone(),
                fmt_f64(s.time[i]),
                s.ego_lane[i].to_string(),
                fmt_f64(s.v0[i]),
                fmt_f64(s.v_proj[i]),
                s.chosen_lane[i].to_string(),
                fmt_f64(s.available[i]),
                fmt_f64(s.delta[i]),
                fmt_f64(s.scaled[i]),
                fmt_f64(s.pass[i]),
                fmt_f64(v.baseline[i]),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_grid(path: &Path, grid: &[GridPoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k1", "k2", "loss"])?;
    for p in grid {
        w.write_record([fmt_f64(p.k1), fmt_f64(p.k2), fmt_f64(p.loss)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<Vec<GridPoint>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Ranked aggregate metric against ranked travel time, one row per vehicle.
pub fn write_scatter(path: &Path, reports: &[EventReport]) -> Result<usize> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "event_id",
        "vehicle_id",
        "travel_time",
        "travel_time_rank",
        "pass",
        "pass_rank",
        "baseline",
        "baseline_rank",
    ])?;
    let mut rows = 0;
    for r in reports {
        let (Some(p), Some(b)) = (&r.pass, &r.baseline) else {
            continue;
        };
        for (pv, bv) in p.vehicles.iter().zip(&b.vehicles) {
            w.write_record([
                r.event_id.clone(),
                pv.vehicle_id.clone(),
                fmt_f64(pv.travel_time),
                fmt_f64(pv.travel_time_rank),
                fmt_f64(pv.aggregate),
                fmt_f64(pv.metric_rank),
                fmt_f64(bv.aggregate),
                fmt_f64(bv.metric_rank),
            ])?;
            rows += 1;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(rows)
}

/// Everything the command-line pipeline needs, read from one TOML file.
/// Command-line flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Existing dataset (directory or manifest) to evaluate instead of the
    /// simulated one.
    pub dataset: Option<PathBuf>,
    pub preset: String,
    pub events: Option<usize>,
    pub runs: Option<usize>,
    /// Explicit scenarios; when present they replace the preset's.
    pub scenarios: Vec<ScenarioSpec>,
    /// Explicit policies; when present they replace the preset's.
    pub policies: Vec<EgoPolicy>,
    pub pass: PassConfig,
    pub baseline: BaselineConfig,
    pub scene: SceneConfig,
    pub grid: GridSpec,
    /// Treat warnings (excluded events, skipped vehicles, speeding) as errors.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out: PathBuf::from("out"),
            dataset: None,
            preset: crate::sim::presets::PAPER_DESK.to_string(),
            events: None,
            runs: None,
            scenarios: Vec::new(),
            policies: Vec::new(),
            pass: PassConfig::default(),
            baseline: BaselineConfig::default(),
            scene: SceneConfig::default(),
            grid: GridSpec::default(),
            strict: false,
        }
    }
}

impl RunConfig {
    /// Parses the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        if let Some(d) = cfg.dataset.as_mut().filter(|d| d.is_relative()) {
            *d = base.join(&*d);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.eval().validate()?;
        self.grid.validate()?;
        for s in &self.scenarios {
            s.validate()?;
        }
        for p in &self.policies {
            p.validate()?;
        }
        if let Some(d) = &self.dataset {
            if !manifest_path(d).exists() {
                return Err(Error::Config(format!("dataset {} has no {MANIFEST_FILE}", d.display())));
            }
        }
        Ok(())
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            pass: self.pass,
            baseline: self.baseline,
            scene: self.scene,
        }
    }

    /// Scenarios and policies to simulate: explicit lists win over the preset.
    pub fn cohort(&self) -> Result<(Vec<ScenarioSpec>, Vec<EgoPolicy>)> {
        let (mut specs, mut policies) = crate::sim::presets::preset(&self.preset, self.events, self.runs)?;
        if !self.scenarios.is_empty() {
            specs = self.scenarios.clone();
            if let Some(n) = self.events {
                specs.truncate(n);
            }
        }
        if !self.policies.is_empty() {
            policies = self.policies.clone();
            if let Some(n) = self.runs {
                policies.truncate(n);
            }
        }
        Ok((specs, policies))
    }
}
