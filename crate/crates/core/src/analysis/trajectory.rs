use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::{GenerationRecord, Trajectory};

pub const DEFAULT_GRID_POINTS: usize = 200;
const LOG_GUARD: f64 = 1e-12;

/// Per-generation quantity turned into a comparison row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Infeasible component ratio of the trials.
    ViolationProbability,
    /// `log10(best_error + 1e-12)`.
    BestSoFar,
    /// Largest per-component population variance.
    PopulationVariance,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::ViolationProbability, Metric::BestSoFar, Metric::PopulationVariance];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::ViolationProbability => "violation_probability",
            Metric::BestSoFar => "best_so_far",
            Metric::PopulationVariance => "population_variance",
        }
    }

    pub fn value(self, rec: &GenerationRecord) -> f64 {
        match self {
            Metric::ViolationProbability => rec.infeasible_component_ratio,
            Metric::BestSoFar => (rec.best_error.max(0.0) + LOG_GUARD).log10(),
            Metric::PopulationVariance => rec.max_component_variance,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(vec![format!("metric: unknown metric `{s}`")]))
    }
}

/// How rows of several groups (e.g. instances) under one label are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Average everything into one `G`-long row.
    #[default]
    Average,
    /// Average within each group, then concatenate the group rows.
    Concatenate,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Aggregation::Average),
            "concatenate" => Ok(Aggregation::Concatenate),
            _ => Err(Error::InvalidConfig(vec![format!("aggregation: expected `average` or `concatenate`, got `{s}`")])),
        }
    }
}

/// Linear interpolation of `(xs, ys)` onto `g` evenly spaced points spanning
/// `[xs[0], xs[last]]`. `xs` must be non-decreasing.
pub fn resample(xs: &[f64], ys: &[f64], g: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.is_empty() || g == 0 {
        return Err(Error::EmptyRunSet);
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if g == 1 || hi <= lo {
        return Ok(vec![ys[ys.len() - 1]; g]);
    }
    let mut out = Vec::with_capacity(g);
    let mut k = 0;
    for step in 0..g {
        let t = if step == g - 1 { hi } else { lo + (hi - lo) * step as f64 / (g - 1) as f64 };
        while k + 1 < xs.len() - 1 && xs[k + 1] <= t {
            k += 1;
        }
        let (x0, x1) = (xs[k], xs[k + 1]);
        let v = if x1 > x0 {
            let w = ((t - x0) / (x1 - x0)).clamp(0.0, 1.0);
            ys[k] + w * (ys[k + 1] - ys[k])
        } else {
            ys[k + 1]
        };
        out.push(v);
    }
    Ok(out)
}

/// Metric series of one run against feasible evaluations. The initial
/// population row carries no trials and is skipped when later rows exist.
fn series(traj: &Trajectory, metric: Metric) -> (Vec<f64>, Vec<f64>) {
    let rows: Vec<&GenerationRecord> = if traj.records.len() > 1 {
        traj.records.iter().filter(|r| r.generation > 0).collect()
    } else {
        traj.records.iter().collect()
    };
    rows.iter().map(|r| (r.feasible_evaluations as f64, metric.value(r))).unzip()
}

/// Resample every run onto `g` points and average them.
pub fn build_trajectory(runs: &[&Trajectory], metric: Metric, g: usize) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; g];
    let mut count = 0usize;
    for t in runs {
        if t.records.is_empty() {
            continue;
        }
        let (xs, ys) = series(t, metric);
        for (a, v) in acc.iter_mut().zip(resample(&xs, &ys, g)?) {
            *a += v;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyRunSet);
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(acc)
}

/// Row for one label from its groups of runs.
pub fn build_row(groups: &[Vec<&Trajectory>], metric: Metric, g: usize, agg: Aggregation) -> Result<Vec<f64>> {
    match agg {
        Aggregation::Average => {
            let all: Vec<&Trajectory> = groups.iter().flatten().copied().collect();
            build_trajectory(&all, metric, g)
        }
        Aggregation::Concatenate => {
            if groups.is_empty() {
                return Err(Error::EmptyRunSet);
            }
            let mut row = Vec::with_capacity(g * groups.len());
            for grp in groups {
                row.extend(build_trajectory(grp, metric, g)?);
            }
            Ok(row)
        }
    }
}

/// Labelled rows of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMatrix {
    pub metric: Metric,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TrajectoryMatrix {
    pub fn new(metric: Metric, labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::InvalidMatrix(format!("{} labels for {} rows", labels.len(), rows.len())));
        }
        if let Some(first) = rows.first() {
            if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), got: bad.len() });
            }
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::InvalidMatrix("labels must be unique".into()));
        }
        Ok(Self { metric, labels, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(generation: u64, nfe: u64, ratio: f64) -> GenerationRecord {
        GenerationRecord {
            generation,
            feasible_evaluations: nfe,
            population_size: 4,
            best_error: 1.0,
            infeasible_component_ratio: ratio,
            infeasible_individual_ratio: ratio,
            max_component_variance: 1.0,
            mean_component_variance: 1.0,
            corrections_applied: 0,
            adaptive_probabilities: None,
        }
    }

    fn traj(values: &[f64]) -> Trajectory {
        let mut t = Trajectory::default();
        t.push(rec(0, 0, 0.0));
        for (k, &v) in values.iter().enumerate() {
            t.push(rec(k as u64 + 1, 10 * (k as u64 + 1), v));
        }
        t
    }

    #[test]
    fn constant_series() {
        let t = traj(&[0.5; 7]);
        assert_eq!(build_trajectory(&[&t], Metric::ViolationProbability, 10).unwrap(), vec![0.5; 10]);
    }

    #[test]
    fn two_point_interpolation() {
        assert_eq!(resample(&[0.0, 100.0], &[0.0, 1.0], 3).unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn interpolation_handles_repeated_abscissae() {
        let r = resample(&[0.0, 5.0, 5.0, 10.0], &[0.0, 1.0, 3.0, 3.0], 3).unwrap();
        assert_eq!(r, vec![0.0, 3.0, 3.0]);
    }

    #[test]
    fn runs_are_averaged() {
        let a = traj(&[0.0; 5]);
        let b = traj(&[1.0; 5]);
        assert_eq!(build_trajectory(&[&a, &b], Metric::ViolationProbability, 4).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn concatenation_keeps_groups_apart() {
        let a = traj(&[0.0; 5]);
        let b = traj(&[1.0; 5]);
        let row = build_row(&[vec![&a], vec![&b]], Metric::ViolationProbability, 2, Aggregation::Concatenate).unwrap();
        assert_eq!(row, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_run_set_is_an_error() {
        assert!(matches!(build_trajectory(&[], Metric::BestSoFar, 5), Err(Error::EmptyRunSet)));
    }

    #[test]
    fn best_so_far_is_logged() {
        let mut r = rec(1, 1, 0.0);
        r.best_error = 0.0;
        assert_eq!(Metric::BestSoFar.value(&r), -12.0);
        r.best_error = 100.0;
        assert!((Metric::BestSoFar.value(&r) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_validation() {
        assert!(TrajectoryMatrix::new(Metric::BestSoFar, vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(TrajectoryMatrix::new(Metric::BestSoFar, vec!["a".into(), "b".into()], vec![vec![1.0], vec![]]).is_err());
    }
}
