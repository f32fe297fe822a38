use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sweep::{write_atomic, Manifest, ManifestEntry, RunSummary};
use crate::analysis::{
    build_row, complete_linkage_cluster, rank_methods, similarity_matrix, Aggregation, ErrorTable, Metric,
    TrajectoryMatrix, DEFAULT_GRID_POINTS,
};
use crate::engine::EngineKind;
use crate::error::{Error, Result};
use crate::par::{try_map_indexed, Execution};
use crate::telemetry::{format_float, BehaviourClass, Trajectory};

/// What a clustering or ranking label stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    /// One label per correction method (per engine if the manifest mixes engines).
    #[default]
    Method,
    /// One label per benchmark function.
    Function,
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "method" => Ok(GroupBy::Method),
            "function" => Ok(GroupBy::Function),
            _ => Err(Error::InvalidConfig(vec![format!("by: expected `method` or `function`, got `{s}`")])),
        }
    }
}

/// Restricts a report to part of the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selection {
    pub engine: Option<EngineKind>,
}

impl Selection {
    fn entries<'m>(&self, m: &'m Manifest) -> Result<Vec<&'m ManifestEntry>> {
        let v: Vec<&ManifestEntry> = m.runs.iter().filter(|e| self.engine.is_none_or(|k| e.engine == k)).collect();
        if v.is_empty() {
            return Err(Error::EmptyRunSet);
        }
        Ok(v)
    }
}

fn method_label(e: &ManifestEntry, mixed_engines: bool) -> String {
    if mixed_engines {
        format!("{}:{}", e.engine.as_str(), e.bchm.id())
    } else {
        e.bchm.id().to_string()
    }
}

fn mixed_engines(entries: &[&ManifestEntry]) -> bool {
    entries.iter().map(|e| e.engine).collect::<BTreeSet<_>>().len() > 1
}

fn load_all<T: Send>(
    m: &Manifest,
    entries: &[&ManifestEntry],
    exec: Execution,
    f: impl Fn(&Manifest, &ManifestEntry) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    m.check_complete()?;
    try_map_indexed(entries.len(), exec, |i| f(m, entries[i]))
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf)
}

/// Per cell: class counts over runs, plus the class of the median-error run.
/// Writes `classes.csv` into `out`.
pub fn classify_report(m: &Manifest, sel: &Selection, out: &Path, exec: Execution) -> Result<PathBuf> {
    let entries = sel.entries(m)?;
    let summaries = load_all(m, &entries, exec, Manifest::load_summary)?;

    type CellKey = (EngineKind, crate::benchmarks::Mode, String, usize, u64, String);
    let mut order: Vec<CellKey> = Vec::new();
    let mut cells: BTreeMap<CellKey, Vec<&RunSummary>> = BTreeMap::new();
    for (e, s) in entries.iter().zip(&summaries) {
        let key = (e.engine, e.mode, e.function.clone(), e.dimension, e.instance, e.bchm.id().to_string());
        if !cells.contains_key(&key) {
            order.push(key.clone());
        }
        cells.entry(key).or_default().push(s);
    }

    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        let mut header: Vec<String> =
            ["engine", "mode", "function", "dimension", "instance", "bchm", "runs"].map(String::from).to_vec();
        header.extend(BehaviourClass::ALL.iter().map(|c| c.code().to_string()));
        header.extend(["median_error", "median_class", "degraded_runs"].map(String::from));
        w.write_record(&header)?;
        for key in &order {
            let runs = &cells[key];
            let mut sorted: Vec<&RunSummary> = runs.clone();
            sorted.sort_by(|a, b| a.final_error.total_cmp(&b.final_error));
            let median = sorted[(sorted.len() - 1) / 2];
            let mut rec = vec![
                key.0.as_str().to_string(),
                key.1.as_str().to_string(),
                key.2.clone(),
                key.3.to_string(),
                key.4.to_string(),
                key.5.clone(),
                runs.len().to_string(),
            ];
            for c in BehaviourClass::ALL {
                rec.push(runs.iter().filter(|s| s.final_class == c).count().to_string());
            }
            rec.push(format_float(median.final_error));
            rec.push(median.final_class.code().to_string());
            rec.push(runs.iter().filter(|s| s.classification_degraded).count().to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    let path = out.join("classes.csv");
    write_atomic(&path, &buf)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOptions {
    pub by: GroupBy,
    pub metrics: Vec<Metric>,
    pub grid_points: usize,
    pub aggregation: Aggregation,
    pub selection: Selection,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            by: GroupBy::Method,
            metrics: Metric::ALL.to_vec(),
            grid_points: DEFAULT_GRID_POINTS,
            aggregation: Aggregation::Average,
            selection: Selection::default(),
        }
    }
}

/// Labels with their runs split into comparable groups (same cell
/// coordinates apart from the label).
fn label_groups<'a>(
    entries: &[&'a ManifestEntry],
    trajectories: &'a [Trajectory],
    by: GroupBy,
) -> BTreeMap<String, BTreeMap<String, Vec<&'a Trajectory>>> {
    let mixed = mixed_engines(entries);
    let mut out: BTreeMap<String, BTreeMap<String, Vec<&Trajectory>>> = BTreeMap::new();
    for (e, t) in entries.iter().zip(trajectories) {
        let (label, group) = match by {
            GroupBy::Method => (
                method_label(e, mixed),
                format!("{}/{}/d{}/i{}", e.mode.as_str(), e.function, e.dimension, e.instance),
            ),
            GroupBy::Function => (
                e.function.clone(),
                format!("{}/{}/d{}/i{}/{}", e.engine.as_str(), e.mode.as_str(), e.dimension, e.instance, e.bchm.id()),
            ),
        };
        out.entry(label).or_default().entry(group).or_default().push(t);
    }
    out
}

/// Build the labelled trajectory matrix for one metric.
pub fn trajectory_matrix(m: &Manifest, metric: Metric, opts: &ClusterOptions, exec: Execution) -> Result<TrajectoryMatrix> {
    let entries = opts.selection.entries(m)?;
    let trajectories = load_all(m, &entries, exec, Manifest::load_trajectory)?;
    matrix_from(&entries, &trajectories, metric, opts)
}

fn matrix_from(
    entries: &[&ManifestEntry],
    trajectories: &[Trajectory],
    metric: Metric,
    opts: &ClusterOptions,
) -> Result<TrajectoryMatrix> {
    let groups = label_groups(entries, trajectories, opts.by);
    let mut labels = Vec::with_capacity(groups.len());
    let mut rows = Vec::with_capacity(groups.len());
    for (label, g) in groups {
        let g: Vec<Vec<&Trajectory>> = g.into_values().collect();
        rows.push(build_row(&g, metric, opts.grid_points, opts.aggregation)?);
        labels.push(label);
    }
    TrajectoryMatrix::new(metric, labels, rows)
}

/// For each metric writes `similarity_<metric>.csv`, `dendrogram_<metric>.json`
/// and `dendrogram_<metric>.nwk` into `out`.
pub fn cluster_report(m: &Manifest, opts: &ClusterOptions, out: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    if opts.grid_points < 2 {
        return Err(Error::InvalidConfig(vec!["grid_points: must be at least 2".into()]));
    }
    let entries = opts.selection.entries(m)?;
    let trajectories = load_all(m, &entries, exec, Manifest::load_trajectory)?;
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for &metric in &opts.metrics {
        let matrix = matrix_from(&entries, &trajectories, metric, opts)?;
        let sim = similarity_matrix(&matrix, exec)?;
        let tree = complete_linkage_cluster(&sim)?;

        let mut csv = Vec::new();
        sim.write_csv(&mut csv)?;
        let p = out.join(format!("similarity_{metric}.csv"));
        write_atomic(&p, &csv)?;
        written.push(p);

        let p = out.join(format!("dendrogram_{metric}.json"));
        write_atomic(&p, format!("{}\n", tree.to_json()?).as_bytes())?;
        written.push(p);

        let p = out.join(format!("dendrogram_{metric}.nwk"));
        write_atomic(&p, format!("{}\n", tree.to_newick()).as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

/// Final errors per (function, method). Functions carry dimension and mode
/// when the manifest has more than one of either.
pub fn error_table(m: &Manifest, sel: &Selection, exec: Execution) -> Result<ErrorTable> {
    let entries = sel.entries(m)?;
    let summaries = load_all(m, &entries, exec, Manifest::load_summary)?;
    let mixed = mixed_engines(&entries);
    let dims: BTreeSet<usize> = entries.iter().map(|e| e.dimension).collect();
    let modes: BTreeSet<_> = entries.iter().map(|e| e.mode).collect();
    let qualify = dims.len() > 1 || modes.len() > 1;
    let mut table = ErrorTable::new();
    for (e, s) in entries.iter().zip(&summaries) {
        let f = if qualify {
            format!("{}/d{}/{}", e.function, e.dimension, e.mode.as_str())
        } else {
            e.function.clone()
        };
        table.entry((f, method_label(e, mixed))).or_default().push(s.final_error);
    }
    Ok(table)
}

/// Writes `ranking.csv` into `out`.
pub fn rank_report(m: &Manifest, sel: &Selection, out: &Path, exec: Execution) -> Result<PathBuf> {
    let ranking = rank_methods(&error_table(m, sel, exec)?)?;
    let mut csv = Vec::new();
    ranking.write_csv(&mut csv)?;
    let p = out.join("ranking.csv");
    write_atomic(&p, &csv)?;
    Ok(p)
}
