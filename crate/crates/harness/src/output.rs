//! Result files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use dronesense::plangen::write_plans_csv;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SweepParameter};
use crate::experiment::{self, instance_seed};
use crate::HarnessError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRACE_FILE: &str = "rss_trace.csv";
pub const TRAFFIC_FILE: &str = "traffic.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Written before any result; only `complete` flips once all files exist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub verb: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub instance_seeds: Vec<u64>,
    pub files: Vec<String>,
    pub assumptions: Vec<String>,
    pub complete: bool,
}

impl RunManifest {
    pub fn new(verb: &str, cfg: &ExperimentConfig, instances: usize, files: Vec<String>) -> Self {
        let per_period = cfg.dispatches.div_ceil(periods_of(cfg).max(1));
        Self {
            tool: "dronesense".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            verb: verb.into(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
            master_seed: cfg.seed,
            instance_seeds: (0..instances).map(|i| instance_seed(cfg, i)).collect(),
            files,
            assumptions: vec![
                format!(
                    "dispatches are spread uniformly over periods in index order, {per_period} per period"
                ),
                "dispatch u departs from station u mod B".into(),
                "combined cost is the sum of per-instance min-max normalized energy, mismatch and inefficiency"
                    .into(),
                "greedy sensing uses a mission-wide ledger on synthetic maps and a per-period ledger on traffic"
                    .into(),
            ],
            complete: false,
        }
    }

    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
    }
}

fn periods_of(cfg: &ExperimentConfig) -> usize {
    match &cfg.scenario {
        crate::config::ScenarioConfig::Synthetic(p) => p.time.periods,
        crate::config::ScenarioConfig::Traffic(t) => t.time.periods,
        crate::config::ScenarioConfig::MapFile { .. } => experiment::build_instance(cfg, 0)
            .map(|i| i.map.time.periods)
            .unwrap_or(1),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn prepare(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Writes the manifest, runs `body`, then marks the manifest complete. On
/// failure the manifest stays incomplete.
fn with_manifest<F>(dir: &Path, mut manifest: RunManifest, body: F) -> Result<RunManifest, HarnessError>
where
    F: FnOnce() -> Result<(), HarnessError>,
{
    prepare(dir)?;
    manifest.write(dir)?;
    body()?;
    manifest.complete = true;
    manifest.write(dir)?;
    Ok(manifest)
}

/// `metrics.csv`, `rss_trace.csv` and, for traffic scenarios, `traffic.csv`.
pub fn write_run(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let traffic = matches!(cfg.scenario, crate::config::ScenarioConfig::Traffic(_));
    let mut files = vec![METRICS_FILE.to_string(), TRACE_FILE.to_string()];
    if traffic {
        files.push(TRAFFIC_FILE.into());
    }
    let manifest = RunManifest::new("run", cfg, cfg.maps, files);
    with_manifest(dir, manifest, || {
        let res = experiment::run_experiment(cfg)?;
        write_csv(&dir.join(METRICS_FILE), &res.records)?;
        write_csv(&dir.join(TRACE_FILE), &res.traces)?;
        if traffic {
            write_csv(&dir.join(TRAFFIC_FILE), &res.traffic)?;
        }
        Ok(())
    })
}

/// One `plans/<map>_<policy>.csv` per instance and policy.
pub fn write_plans(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let sets = experiment::export_plan_sets(cfg)?;
    let files: Vec<String> = sets.iter().map(|(stem, _)| format!("plans/{stem}.csv")).collect();
    let manifest = RunManifest::new("export-plans", cfg, cfg.maps, files.clone());
    with_manifest(dir, manifest, || {
        let plans_dir = dir.join("plans");
        prepare(&plans_dir)?;
        for ((_, agents), name) in sets.iter().zip(&files) {
            let path: PathBuf = dir.join(name);
            let file = fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
            let rows = agents.iter().flat_map(|a| a.plans.iter().map(move |p| (a.id, p)));
            write_plans_csv(std::io::BufWriter::new(file), rows)?;
        }
        Ok(())
    })
}

pub fn write_stability(cfg: &ExperimentConfig, max_maps: usize, dir: &Path) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let manifest = RunManifest::new("stability", cfg, max_maps, vec![STABILITY_FILE.into()]);
    with_manifest(dir, manifest, || {
        let rows = experiment::stability_curve(cfg, max_maps)?;
        write_csv(&dir.join(STABILITY_FILE), &rows)
    })
}

pub fn write_sweep(
    cfg: &ExperimentConfig,
    axes: &[(SweepParameter, Vec<f64>)],
    dir: &Path,
) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let manifest = RunManifest::new("sweep", cfg, cfg.maps, vec![SWEEP_FILE.into()]);
    with_manifest(dir, manifest, || {
        let rows = experiment::run_sweep(cfg, axes)?;
        write_csv(&dir.join(SWEEP_FILE), &rows)
    })
}
