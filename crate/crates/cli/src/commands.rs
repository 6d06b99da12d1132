use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};

use pass_core::calibration::grid_search;
use pass_core::io::{self, RunConfig};
use pass_core::pipeline::{self, evaluate_all, EventReport};
use pass_core::report::{CalibrationReport, ComparisonReport, EvaluationReport, Reference, Summary};
use pass_core::sim::generate_cohort;
use pass_core::EvalConfig;

use crate::Options;

const DATASET_DIR: &str = "dataset";
const TICKS_DIR: &str = "evaluation/ticks";
const EVALUATION_FILE: &str = "evaluation.json";
const CALIBRATION_FILE: &str = "calibration.json";
const GRID_FILE: &str = "grid.csv";
const COMPARISON_FILE: &str = "comparison.json";
const SCATTER_FILE: &str = "scatter.csv";
const SUMMARY_TEXT: &str = "summary.txt";
const SUMMARY_JSON: &str = "summary.json";

/// The config file (or defaults) with command-line overrides applied.
fn load(opts: &Options) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(out) = &opts.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if opts.events.is_some() {
        cfg.events = opts.events;
    }
    if opts.runs.is_some() {
        cfg.runs = opts.runs;
    }
    if opts.dataset.is_some() {
        cfg.dataset = opts.dataset.clone();
    }
    if let Some(r) = opts.k1_range {
        cfg.grid.k1_range = r;
    }
    if let Some(r) = opts.k2_range {
        cfg.grid.k2_range = r;
    }
    if let Some(step) = opts.step {
        cfg.grid.step = step;
    }
    cfg.strict |= opts.strict;
    cfg.validate()?;
    Ok(cfg)
}

fn dataset_path(cfg: &RunConfig) -> PathBuf {
    cfg.dataset.clone().unwrap_or_else(|| cfg.out.join(DATASET_DIR))
}

fn load_events(cfg: &RunConfig) -> Result<Vec<pass_core::EventRecording>> {
    let path = dataset_path(cfg);
    if cfg.dataset.is_none() && !io::manifest_path(&path).exists() {
        bail!("no dataset at {}; run `pass simulate` first or pass --dataset", path.display());
    }
    io::read_dataset(&path).with_context(|| format!("reading dataset {}", path.display()))
}

/// Explicit flags win; otherwise `fallback`.
fn coefficients(opts: &Options, fallback: (f64, f64)) -> (f64, f64) {
    (opts.k1.unwrap_or(fallback.0), opts.k2.unwrap_or(fallback.1))
}

fn eval_config(cfg: &RunConfig, k: (f64, f64)) -> Result<EvalConfig> {
    let eval = EvalConfig {
        pass: cfg.pass.with_k(k.0, k.1),
        ..cfg.eval()
    };
    eval.validate()?;
    Ok(eval)
}

fn finish(strict: bool, warnings: &[String]) -> Result<()> {
    for w in warnings {
        warn!("{w}");
    }
    if strict && !warnings.is_empty() {
        bail!("{} warning(s) with --strict", warnings.len());
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn simulate(opts: &Options) -> Result<()> {
    let cfg = load(opts)?;
    let (specs, policies) = cfg.cohort()?;
    info!("simulating {} events x {} runs (seed {})", specs.len(), policies.len(), cfg.seed);
    let data = generate_cohort(&specs, &policies, cfg.seed)?;
    let dir = cfg.out.join(DATASET_DIR);
    let manifest = io::write_dataset(&data, &dir, cfg.seed, Some(&cfg.preset))?;

    let warnings: Vec<String> = data
        .events
        .iter()
        .flat_map(|e| e.runs.iter())
        .filter(|r| !r.completed)
        .map(|r| format!("run {} did not complete the window", r.run_id))
        .collect();
    let runs: usize = manifest.events.iter().map(|e| e.runs.len()).sum();
    if opts.json {
        print_json(&serde_json::json!({
            "dataset": dir,
            "events": manifest.events.len(),
            "runs": runs,
            "seed": cfg.seed,
            "warnings": warnings,
        }))?;
    } else {
        println!("wrote {} events, {runs} runs to {}", manifest.events.len(), dir.display());
    }
    finish(cfg.strict, &warnings)
}

fn write_evaluation(out: &Path, reports: &[EventReport], doc: &EvaluationReport) -> Result<()> {
    for r in reports {
        io::write_ticks(&out.join(TICKS_DIR).join(format!("{}.csv", r.event_id)), r)?;
    }
    io::write_json(&out.join(EVALUATION_FILE), doc)?;
    Ok(())
}

pub fn evaluate(opts: &Options) -> Result<()> {
    let cfg = load(opts)?;
    let events = load_events(&cfg)?;
    let k = coefficients(opts, (cfg.pass.k1, cfg.pass.k2));
    let reports = evaluate_all(&events, &eval_config(&cfg, k)?)?;
    let doc = EvaluationReport::new(k.0, k.1, &reports);
    write_evaluation(&cfg.out, &reports, &doc)?;
    if opts.json {
        print_json(&doc)?;
    } else {
        let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"));
        println!(
            "evaluated {} events at k1 = {}, k2 = {}: mean rank-R2 PASS {}, baseline {}",
            reports.len(),
            k.0,
            k.1,
            fmt(doc.pass_mean_r2),
            fmt(doc.baseline_mean_r2)
        );
    }
    finish(cfg.strict, &doc.warnings)
}

pub fn calibrate(opts: &Options) -> Result<()> {
    let cfg = load(opts)?;
    let events = load_events(&cfg)?;
    // The traces do not depend on (k1, k2); any valid pair will do.
    let reports = evaluate_all(&events, &cfg.eval())?;
    let mut warnings = EvaluationReport::new(cfg.pass.k1, cfg.pass.k2, &reports).warnings;
    let traces: Vec<_> = reports.iter().map(EventReport::traces).collect();
    let grid = cfg.grid;
    info!(
        "searching {} x {} grid",
        grid.k1_values().len(),
        grid.k2_values().len()
    );
    let result = grid_search(&traces, &grid)?;
    io::write_grid(&cfg.out.join(GRID_FILE), &result.grid)?;
    let doc = CalibrationReport::new(&result, grid);
    io::write_json(&cfg.out.join(CALIBRATION_FILE), &doc)?;
    warnings.extend(
        doc.excluded
            .iter()
            .map(|e| format!("event {} excluded from calibration: {}", e.event_id, e.reason)),
    );
    if opts.json {
        print_json(&doc)?;
    } else {
        println!(
            "best k1 = {}, k2 = {} (loss {:.4}, mean rank-R2 {:.3}) over {} grid points",
            doc.k1, doc.k2, doc.loss, doc.mean_r2, doc.grid_points
        );
    }
    finish(cfg.strict, &warnings)
}

fn calibrated(out: &Path) -> Result<Option<(f64, f64)>> {
    let path = out.join(CALIBRATION_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let doc: CalibrationReport = io::read_json(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some((doc.k1, doc.k2)))
}

pub fn compare(opts: &Options) -> Result<()> {
    let cfg = load(opts)?;
    let events = load_events(&cfg)?;
    let fallback = match calibrated(&cfg.out)? {
        Some(k) => k,
        None => {
            info!("no {CALIBRATION_FILE} in {}; using the configured coefficients", cfg.out.display());
            (cfg.pass.k1, cfg.pass.k2)
        }
    };
    let k = coefficients(opts, fallback);
    let reports = evaluate_all(&events, &eval_config(&cfg, k)?)?;
    let comparison = pipeline::compare(&reports)?;
    let scatter_rows = io::write_scatter(&cfg.out.join(SCATTER_FILE), &reports)?;
    let mut warnings = EvaluationReport::new(k.0, k.1, &reports).warnings;
    warnings.extend(
        comparison
            .excluded
            .iter()
            .map(|e| format!("event {e} excluded from comparison")),
    );
    let doc = ComparisonReport {
        k1: k.0,
        k2: k.1,
        comparison,
        scatter_rows,
        reference: Reference::default(),
    };
    io::write_json(&cfg.out.join(COMPARISON_FILE), &doc)?;
    if opts.json {
        print_json(&doc)?;
    } else {
        println!(
            "mean rank-R2 at k1 = {}, k2 = {}: PASS {:.3}, baseline {:.3} over {} events",
            k.0,
            k.1,
            doc.comparison.pass_mean_r2,
            doc.comparison.baseline_mean_r2,
            doc.comparison.events.len()
        );
    }
    finish(cfg.strict, &warnings)
}

fn read_optional<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    let value = io::read_json(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(value))
}

pub fn report(opts: &Options) -> Result<()> {
    let cfg = load(opts)?;
    let calibration: Option<CalibrationReport> = read_optional(&cfg.out.join(CALIBRATION_FILE))?;
    let comparison: Option<ComparisonReport> = read_optional(&cfg.out.join(COMPARISON_FILE))?;
    let evaluation: Option<EvaluationReport> = read_optional(&cfg.out.join(EVALUATION_FILE))?;
    if calibration.is_none() && comparison.is_none() && evaluation.is_none() {
        bail!(
            "nothing to report in {}; run evaluate, calibrate or compare first",
            cfg.out.display()
        );
    }
    let mut warnings = Vec::new();
    if let Some(e) = &evaluation {
        warnings.extend(e.warnings.iter().cloned());
    }
    if let Some(c) = &calibration {
        warnings.extend(
            c.excluded
                .iter()
                .map(|e| format!("event {} excluded from calibration: {}", e.event_id, e.reason)),
        );
    }
    if let Some(c) = &comparison {
        warnings.extend(
            c.comparison
                .excluded
                .iter()
                .map(|e| format!("event {e} excluded from comparison")),
        );
    }
    let summary = Summary {
        calibration,
        comparison,
        evaluation,
        warnings,
    };
    let text = summary.render();
    io::write_text(&cfg.out.join(SUMMARY_TEXT), &text)?;
    io::write_json(&cfg.out.join(SUMMARY_JSON), &summary)?;
    if opts.json {
        print_json(&summary)?;
    } else {
        print!("{text}");
    }
    if cfg.strict && !summary.warnings.is_empty() {
        bail!("{} warning(s) with --strict", summary.warnings.len());
    }
    Ok(())
}
