//! Box domains, individuals, populations and per-component population statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed box `[lower_1, upper_1] x ... x [lower_n, upper_n]`.
///
/// Values lying exactly on a bound are feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidBounds(format!(
                "lower has {} components, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(Error::InvalidBounds("zero-dimensional box".into()));
        }
        for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidBounds(format!(
                    "component {i}: need finite lower < upper, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` in every one of `dim` coordinates.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn component_feasible(&self, i: usize, v: f64) -> bool {
        v >= self.lower[i] && v <= self.upper[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, &v)| self.component_feasible(i, v))
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() })
        }
    }

    /// Clamp `x` into the box in place.
    pub fn clamp_in_place(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

/// Indices of the components of a vector lying outside the box.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ViolationProfile {
    pub violated: Vec<usize>,
}

impl ViolationProfile {
    pub fn count(&self) -> usize {
        self.violated.len()
    }

    pub fn is_feasible(&self) -> bool {
        self.violated.is_empty()
    }
}

pub fn violation_profile(y: &[f64], bounds: &Bounds) -> Result<ViolationProfile> {
    bounds.check_dim(y)?;
    let violated = y
        .iter()
        .enumerate()
        .filter(|&(i, &v)| !bounds.component_feasible(i, v))
        .map(|(i, _)| i)
        .collect();
    Ok(ViolationProfile { violated })
}

/// Number of out-of-box components; no allocation.
pub(crate) fn violation_count(y: &[f64], bounds: &Bounds) -> usize {
    y.iter().enumerate().filter(|&(i, &v)| !bounds.component_feasible(i, v)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub position: Vec<f64>,
    /// `+inf` until evaluated, and for positions outside the box.
    pub fitness: f64,
}

impl Individual {
    pub fn unevaluated(position: Vec<f64>) -> Self {
        Self { position, fitness: f64::INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: u64,
    pub evaluations_used: u64,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Self {
        Self { members, generation: 0, evaluations_used: 0 }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members.first().map_or(0, |m| m.position.len())
    }

    /// Index of the member with the lowest fitness (first one on ties).
    pub fn best_index(&self) -> Option<usize> {
        self.members
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.fitness.total_cmp(&b.1.fitness))
            .map(|(i, _)| i)
    }

    pub fn best_fitness(&self) -> f64 {
        self.best_index().map_or(f64::INFINITY, |i| self.members[i].fitness)
    }

    /// Member indices sorted by ascending fitness; stable, so ties keep index order.
    pub fn ranked_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.members.len()).collect();
        idx.sort_by(|&a, &b| self.members[a].fitness.total_cmp(&self.members[b].fitness));
        idx
    }

    pub fn stats(&self) -> Result<PopulationStats> {
        population_stats(self.members.iter().map(|m| m.position.as_slice()))
    }
}

/// Per-component mean and biased (1/N) variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl PopulationStats {
    pub fn max_variance(&self) -> f64 {
        self.variance.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_variance(&self) -> f64 {
        if self.variance.is_empty() {
            0.0
        } else {
            self.variance.iter().sum::<f64>() / self.variance.len() as f64
        }
    }
}

/// Two-pass mean/variance over the given positions.
pub fn population_stats<'a, I>(positions: I) -> Result<PopulationStats>
where
    I: IntoIterator<Item = &'a [f64]>,
    I::IntoIter: Clone,
{
    let iter = positions.into_iter();
    let mut count = 0usize;
    let mut mean: Vec<f64> = Vec::new();
    for x in iter.clone() {
        if count == 0 {
            mean = vec![0.0; x.len()];
        } else if x.len() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), got: x.len() });
        }
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyPopulation);
    }
    let n = count as f64;
    mean.iter_mut().for_each(|m| *m /= n);

    let mut variance = vec![0.0; mean.len()];
    for x in iter {
        for ((s, v), m) in variance.iter_mut().zip(x).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    variance.iter_mut().for_each(|s| *s /= n);
    Ok(PopulationStats { mean, variance })
}
