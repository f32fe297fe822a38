//! Per-generation bound-violation and convergence telemetry, and end-of-run
//! behaviour classification.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::base::{violation_count, Bounds, Population};
use crate::benchmarks::Objective;
use crate::error::{Error, Result};

/// One row of a run's trajectory.
///
/// Violation ratios are measured on the generation's trial vectors before any
/// correction; variances on the population after selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub feasible_evaluations: u64,
    pub population_size: usize,
    /// Best fitness minus the known optimum value; the raw best fitness when the
    /// optimum is unknown.
    pub best_error: f64,
    pub infeasible_component_ratio: f64,
    pub infeasible_individual_ratio: f64,
    pub max_component_variance: f64,
    pub mean_component_variance: f64,
    pub corrections_applied: u64,
    pub adaptive_probabilities: Option<Vec<f64>>,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "generation",
    "feasible_evaluations",
    "population_size",
    "best_error",
    "infeasible_component_ratio",
    "infeasible_individual_ratio",
    "max_component_variance",
    "mean_component_variance",
    "corrections_applied",
    "adaptive_probabilities",
];

/// Infeasible component and individual counts over a set of trial vectors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ViolationTally {
    pub trials: usize,
    pub dimension: usize,
    pub infeasible_components: usize,
    pub infeasible_individuals: usize,
}

impl ViolationTally {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, ..Self::default() }
    }

    pub fn add(&mut self, trial: &[f64], bounds: &Bounds) {
        let k = violation_count(trial, bounds);
        self.trials += 1;
        self.infeasible_components += k;
        if k > 0 {
            self.infeasible_individuals += 1;
        }
    }

    pub fn component_ratio(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.infeasible_components as f64 / (self.trials * self.dimension) as f64
        }
    }

    pub fn individual_ratio(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.infeasible_individuals as f64 / self.trials as f64
        }
    }
}

/// Build the record for a completed generation from its pre-correction trials
/// and the post-selection population.
///
/// `corrections_applied` and `adaptive_probabilities` are left for the engine to fill.
pub fn record_generation(
    trials: &[Vec<f64>],
    population: &Population,
    problem: &dyn Objective,
) -> Result<GenerationRecord> {
    let bounds = problem.bounds();
    let mut tally = ViolationTally::new(bounds.dim());
    for t in trials {
        bounds.check_dim(t)?;
        tally.add(t, bounds);
    }
    record_from_tally(&tally, population, problem.optimum_value())
}

pub(crate) fn record_from_tally(
    tally: &ViolationTally,
    population: &Population,
    optimum_value: Option<f64>,
) -> Result<GenerationRecord> {
    let stats = population.stats()?;
    let best = population.best_fitness();
    Ok(GenerationRecord {
        generation: population.generation,
        feasible_evaluations: population.evaluations_used,
        population_size: population.len(),
        best_error: optimum_value.map_or(best, |f| best - f),
        infeasible_component_ratio: tally.component_ratio(),
        infeasible_individual_ratio: tally.individual_ratio(),
        max_component_variance: stats.max_variance(),
        mean_component_variance: stats.mean_variance(),
        corrections_applied: 0,
        adaptive_probabilities: None,
    })
}

/// Round-trip-exact float text: 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn parse_float(s: &str, column: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::MalformedTelemetry(format!("{column}: `{s}` is not a number")))
}

fn parse_int<T: FromStr>(s: &str, column: &str) -> Result<T> {
    s.parse::<T>().map_err(|_| Error::MalformedTelemetry(format!("{column}: `{s}` is not an integer")))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<GenerationRecord>,
}

impl Trajectory {
    pub fn push(&mut self, rec: GenerationRecord) {
        self.records.push(rec);
    }

    pub fn last(&self) -> Option<&GenerationRecord> {
        self.records.last()
    }

    /// Comma-separated, header row, LF line endings.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for r in &self.records {
            let probs = r
                .adaptive_probabilities
                .as_ref()
                .map(|p| p.iter().map(|&v| format_float(v)).collect::<Vec<_>>().join(";"))
                .unwrap_or_default();
            w.write_record([
                r.generation.to_string(),
                r.feasible_evaluations.to_string(),
                r.population_size.to_string(),
                format_float(r.best_error),
                format_float(r.infeasible_component_ratio),
                format_float(r.infeasible_individual_ratio),
                format_float(r.max_component_variance),
                format_float(r.mean_component_variance),
                r.corrections_applied.to_string(),
                probs,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rd.headers()?.clone();
        if header.iter().ne(CSV_COLUMNS.iter().copied()) {
            return Err(Error::MalformedTelemetry(format!("unexpected header: {header:?}")));
        }
        let mut records = Vec::new();
        for row in rd.records() {
            let row = row?;
            let col = |i: usize| row.get(i).unwrap_or("");
            let probs = col(9);
            records.push(GenerationRecord {
                generation: parse_int(col(0), CSV_COLUMNS[0])?,
                feasible_evaluations: parse_int(col(1), CSV_COLUMNS[1])?,
                population_size: parse_int(col(2), CSV_COLUMNS[2])?,
                best_error: parse_float(col(3), CSV_COLUMNS[3])?,
                infeasible_component_ratio: parse_float(col(4), CSV_COLUMNS[4])?,
                infeasible_individual_ratio: parse_float(col(5), CSV_COLUMNS[5])?,
                max_component_variance: parse_float(col(6), CSV_COLUMNS[6])?,
                mean_component_variance: parse_float(col(7), CSV_COLUMNS[7])?,
                corrections_applied: parse_int(col(8), CSV_COLUMNS[8])?,
                adaptive_probabilities: if probs.is_empty() {
                    None
                } else {
                    Some(probs.split(';').map(|p| parse_float(p, CSV_COLUMNS[9])).collect::<Result<_>>()?)
                },
            });
        }
        Ok(Self { records })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub error_threshold: f64,
    pub variance_threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { error_threshold: 1e-6, variance_threshold: 1e-8 }
    }
}

/// End-of-run convergence behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BehaviourClass {
    /// Optimum found and population converged.
    #[serde(rename = "GB")]
    GoodBehaviour,
    /// Optimum found, population still diverse.
    #[serde(rename = "SF")]
    SolutionFound,
    /// Population converged away from the optimum.
    #[serde(rename = "PC")]
    PrematureConvergence,
    /// Neither.
    #[serde(rename = "BB")]
    BadBehaviour,
}

impl BehaviourClass {
    pub const ALL: [BehaviourClass; 4] = [
        BehaviourClass::GoodBehaviour,
        BehaviourClass::SolutionFound,
        BehaviourClass::PrematureConvergence,
        BehaviourClass::BadBehaviour,
    ];

    pub fn code(self) -> &'static str {
        match self {
            BehaviourClass::GoodBehaviour => "GB",
            BehaviourClass::SolutionFound => "SF",
            BehaviourClass::PrematureConvergence => "PC",
            BehaviourClass::BadBehaviour => "BB",
        }
    }
}

impl fmt::Display for BehaviourClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// `variance` is the largest per-component population variance.
pub fn classify(final_error: f64, variance: f64, cfg: &ClassifierConfig) -> BehaviourClass {
    let found = final_error < cfg.error_threshold;
    let converged = variance < cfg.variance_threshold;
    match (found, converged) {
        (true, true) => BehaviourClass::GoodBehaviour,
        (true, false) => BehaviourClass::SolutionFound,
        (false, true) => BehaviourClass::PrematureConvergence,
        (false, false) => BehaviourClass::BadBehaviour,
    }
}

/// Without a known optimum only convergence can be judged: PC or BB.
pub fn classify_variance_only(variance: f64, cfg: &ClassifierConfig) -> BehaviourClass {
    if variance < cfg.variance_threshold {
        BehaviourClass::PrematureConvergence
    } else {
        BehaviourClass::BadBehaviour
    }
}
