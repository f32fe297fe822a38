use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Method;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptiveParams {
    /// Generations between probability updates.
    pub update_period: u32,
    pub floor_probability: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self { update_period: 25, floor_probability: 0.05 }
    }
}

/// Stochastic per-trial selection from a pool of corrections, with selection
/// probabilities re-estimated from success ratios every `update_period` generations.
///
/// Scores use Laplace smoothing, `(successes + 1) / (uses + 2)`; probabilities
/// are proportional to scores, then floored at `floor_probability`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub pool: Vec<Method>,
    pub probabilities: Vec<f64>,
    pub uses: Vec<u64>,
    pub successes: Vec<u64>,
    pub update_period: u32,
    pub floor_probability: f64,
    generations_since_update: u32,
}

impl AdaptiveState {
    pub const DEFAULT_POOL: [Method; 5] =
        [Method::VectorBest, Method::ExpBest, Method::Saturation, Method::VectorTarget, Method::Beta];

    pub fn new(params: AdaptiveParams) -> Result<Self> {
        Self::with_pool(Self::DEFAULT_POOL.to_vec(), params)
    }

    pub fn with_pool(pool: Vec<Method>, params: AdaptiveParams) -> Result<Self> {
        let k = pool.len();
        let mut errors = Vec::new();
        if k == 0 {
            errors.push("adaptive.pool: must not be empty".to_string());
        }
        if pool.contains(&Method::Dismiss) {
            errors.push("adaptive.pool: dismiss cannot be pooled".to_string());
        }
        if params.update_period == 0 {
            errors.push("adaptive.update_period: must be positive".to_string());
        }
        let floor = params.floor_probability;
        if !(0.0..=1.0).contains(&floor) || (k > 0 && floor * k as f64 > 1.0) {
            errors.push(format!("adaptive.floor_probability: {floor} infeasible for a pool of {k}"));
        }
        if !errors.is_empty() {
            return Err(Error::InvalidConfig(errors));
        }
        Ok(Self {
            probabilities: vec![1.0 / k as f64; k],
            uses: vec![0; k],
            successes: vec![0; k],
            pool,
            update_period: params.update_period,
            floor_probability: floor,
            generations_since_update: 0,
        })
    }

    /// Pool index for a unit draw, by inverting the categorical CDF.
    pub fn index_for_unit(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.probabilities.len() - 1
    }

    /// Draw a pool member and count the use.
    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (usize, Method) {
        let u: f64 = rng.random();
        self.select_with_unit(u)
    }

    pub fn select_with_unit(&mut self, u: f64) -> (usize, Method) {
        let k = self.index_for_unit(u);
        self.uses[k] += 1;
        (k, self.pool[k])
    }

    pub fn record_success(&mut self, k: usize) {
        self.successes[k] += 1;
    }

    /// Call once per completed generation; updates every `update_period` calls.
    pub fn end_generation(&mut self) -> bool {
        self.generations_since_update += 1;
        if self.generations_since_update >= self.update_period {
            self.update();
            true
        } else {
            false
        }
    }

    /// Re-estimate probabilities from the counters, then reset the counters.
    pub fn update(&mut self) {
        let scores: Vec<f64> = self
            .successes
            .iter()
            .zip(&self.uses)
            .map(|(&s, &u)| (s as f64 + 1.0) / (u as f64 + 2.0))
            .collect();
        self.probabilities = floored_proportions(&scores, self.floor_probability);
        self.uses.iter_mut().for_each(|u| *u = 0);
        self.successes.iter_mut().for_each(|s| *s = 0);
        self.generations_since_update = 0;
    }
}

/// Normalise `weights` to sum 1 with every entry at least `floor`.
///
/// Entries that would fall under the floor are pinned to it; the remaining
/// mass is shared by the others in proportion to their weights. Repeats until
/// no unpinned entry is below the floor.
fn floored_proportions(weights: &[f64], floor: f64) -> Vec<f64> {
    let k = weights.len();
    let mut pinned = vec![false; k];
    loop {
        let n_pinned = pinned.iter().filter(|&&p| p).count();
        let free_mass = 1.0 - floor * n_pinned as f64;
        let free_weight: f64 = weights.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(w, _)| w).sum();
        let probs: Vec<f64> = weights
            .iter()
            .zip(&pinned)
            .map(|(&w, &p)| if p { floor } else { free_mass * w / free_weight })
            .collect();
        let mut changed = false;
        for (i, &p) in probs.iter().enumerate() {
            if !pinned[i] && p < floor {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed || pinned.iter().all(|&p| p) {
            return if pinned.iter().all(|&p| p) { vec![1.0 / k as f64; k] } else { probs };
        }
    }
}
