use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{RunSpec, SweepConfig};
use crate::bchm::BchmChoice;
use crate::benchmarks::{Mode, ProblemRegistry};
use crate::engine::{run, EngineKind, RunResult};
use crate::error::{Error, Result};
use crate::par::{try_map_indexed, Execution};
use crate::rng::{derive_key, str_key};
use crate::telemetry::{BehaviourClass, Trajectory};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Contents of a run's summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Resolved configuration; enough to repeat the run.
    pub config: RunSpec,
    pub problem: String,
    pub final_class: BehaviourClass,
    pub classification_degraded: bool,
    pub final_error: f64,
    pub final_best_fitness: f64,
    pub best_position: Vec<f64>,
    pub feasible_evaluations: u64,
    pub infeasible_calls: u64,
    pub generations: u64,
    pub final_population_size: usize,
    pub final_max_variance: f64,
    pub adaptive_probabilities: Option<Vec<f64>>,
    pub wall_time_seconds: f64,
}

impl RunSummary {
    fn new(spec: &RunSpec, problem: &str, r: &RunResult, wall: f64) -> Self {
        Self {
            config: spec.clone(),
            problem: problem.to_string(),
            final_class: r.behaviour,
            classification_degraded: r.classification_degraded,
            final_error: r.final_best_error,
            final_best_fitness: r.final_best_fitness,
            best_position: r.best_position.clone(),
            feasible_evaluations: r.feasible_evaluations,
            infeasible_calls: r.infeasible_calls,
            generations: r.generations,
            final_population_size: r.final_population_size,
            final_max_variance: r.final_stats.max_variance(),
            adaptive_probabilities: r.final_adaptive_probabilities.clone(),
            wall_time_seconds: wall,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// Write via a sibling temp file and rename, so a crash never leaves a
/// half-written artifact under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Execute one run and write `trajectory` (CSV) and `summary` (JSON).
pub fn execute_run(spec: &RunSpec, registry: &ProblemRegistry, trajectory: &Path, summary: &Path) -> Result<RunSummary> {
    let cfg = spec.to_run_config(registry)?;
    let start = Instant::now();
    let result = run(&cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let mut csv = Vec::new();
    result.trajectory.write_csv(&mut csv)?;
    let s = RunSummary::new(spec, cfg.problem.name(), &result, wall);
    write_atomic(trajectory, &csv)?;
    let mut json = serde_json::to_vec_pretty(&s)?;
    json.push(b'\n');
    write_atomic(summary, &json)?;
    Ok(s)
}

/// One run of one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub engine: EngineKind,
    pub mode: Mode,
    pub function: String,
    pub dimension: usize,
    pub instance: u64,
    pub bchm: BchmChoice,
    pub run: u32,
    pub seed: u64,
    /// Relative to the manifest's directory, `/`-separated.
    pub trajectory: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SweepConfig,
    pub runs: Vec<ManifestEntry>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read(path)?;
        let mut m: Manifest = serde_json::from_slice(&text)
            .map_err(|e| Error::InvalidConfig(vec![format!("manifest {}: {e}", path.display())]))?;
        m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn trajectory_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.trajectory)
    }

    pub fn summary_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.summary)
    }

    /// Every referenced file must exist; the error lists all gaps.
    pub fn check_complete(&self) -> Result<()> {
        let missing: Vec<PathBuf> = self
            .runs
            .iter()
            .flat_map(|e| [self.trajectory_path(e), self.summary_path(e)])
            .filter(|p| !p.is_file())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingArtifacts(missing))
        }
    }

    pub fn load_trajectory(&self, e: &ManifestEntry) -> Result<Trajectory> {
        Trajectory::read_csv(fs::File::open(self.trajectory_path(e))?)
    }

    pub fn load_summary(&self, e: &ManifestEntry) -> Result<RunSummary> {
        RunSummary::load(&self.summary_path(e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub total_runs: usize,
    pub executed: usize,
    pub skipped: usize,
    pub manifest: PathBuf,
}

/// Seed for one run. Depends only on the run's coordinates, never on the
/// schedule.
pub fn run_seed(base_seed: u64, function: &str, instance: u64, dimension: usize, engine: EngineKind, bchm: BchmChoice, run: u32) -> u64 {
    derive_key(
        base_seed,
        &[str_key(function), instance, dimension as u64, str_key(engine.as_str()), str_key(bchm.id()), run as u64],
    )
}

/// Every run of the sweep in a fixed order.
pub fn plan(cfg: &SweepConfig) -> Vec<ManifestEntry> {
    let mut out = Vec::new();
    for &engine in &cfg.engines {
        for &mode in &cfg.modes {
            for function in &cfg.functions {
                for &dimension in &cfg.dimensions {
                    for &instance in &cfg.instances {
                        for &bchm in &cfg.bchms {
                            for run in 0..cfg.runs_per_cell {
                                let dir = format!(
                                    "{}/{}/{function}/d{dimension}/i{instance}/{}",
                                    engine.as_str(),
                                    mode.as_str(),
                                    bchm.id()
                                );
                                out.push(ManifestEntry {
                                    engine,
                                    mode,
                                    function: function.clone(),
                                    dimension,
                                    instance,
                                    bchm,
                                    run,
                                    seed: run_seed(cfg.base_seed, function, instance, dimension, engine, bchm, run),
                                    trajectory: format!("{dir}/run{run}.csv"),
                                    summary: format!("{dir}/run{run}.json"),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn spec_for(cfg: &SweepConfig, e: &ManifestEntry) -> RunSpec {
    RunSpec {
        function: e.function.clone(),
        instance: e.instance,
        dimension: e.dimension,
        mode: e.mode,
        placement: cfg.placement.clone(),
        engine: e.engine,
        bchm: e.bchm,
        seed: e.seed,
        budget: cfg.budget_multiplier * e.dimension as u64,
        settings: cfg.settings.clone(),
    }
}

/// Run every cell of the sweep under `cfg.output_directory`.
///
/// Layout: `<engine>/<mode>/<function>/d<dim>/i<instance>/<bchm>/run<r>.{csv,json}`
/// plus `manifest.json`. Runs whose two files already exist are skipped.
pub fn run_sweep(cfg: &SweepConfig, registry: &ProblemRegistry) -> Result<SweepReport> {
    cfg.validate()?;
    let entries = plan(cfg);
    // fail on config problems before any work starts
    let mut problems = Vec::new();
    for e in &entries {
        if e.run == 0 {
            if let Err(err) = spec_for(cfg, e).to_run_config(registry) {
                problems.push(format!("{}/d{}/i{}: {err}", e.function, e.dimension, e.instance));
            }
        }
    }
    if !problems.is_empty() {
        problems.dedup();
        return Err(Error::InvalidConfig(problems));
    }

    let root = &cfg.output_directory;
    fs::create_dir_all(root)?;
    let done = try_map_indexed(entries.len(), Execution::with_workers(cfg.parallelism), |i| {
        let e = &entries[i];
        let (csv, json) = (root.join(&e.trajectory), root.join(&e.summary));
        if csv.is_file() && json.is_file() {
            return Ok(false);
        }
        execute_run(&spec_for(cfg, e), registry, &csv, &json)?;
        Ok(true)
    })?;

    let manifest = Manifest { config: cfg.clone(), runs: entries, root: root.clone() };
    let path = root.join(MANIFEST_FILE);
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_atomic(&path, &json)?;
    let executed = done.iter().filter(|&&d| d).count();
    Ok(SweepReport { total_runs: done.len(), executed, skipped: done.len() - executed, manifest: path })
}
