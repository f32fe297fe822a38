use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{binomial_crossover, process_trial, GenerationReport, StepEnv};
use crate::base::Population;
use crate::bchm::{fit_beta_params, CorrectionContext};
use crate::error::{Error, Result};
use crate::telemetry::ViolationTally;
use crate::rng::Dist;

/// L-SHADE parameters. `initial_size` defaults to `18 n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadeParams {
    /// Success-history slots (H).
    pub memory_size: usize,
    /// Archive capacity as a multiple of the current population size.
    pub archive_rate: f64,
    pub initial_size: Option<usize>,
    pub initial_size_per_dim: usize,
    pub min_size: usize,
    pub p_max: f64,
    /// Linear population size reduction.
    pub reduction: bool,
}

impl Default for ShadeParams {
    fn default() -> Self {
        Self {
            memory_size: 6,
            archive_rate: 1.0,
            initial_size: None,
            initial_size_per_dim: 18,
            min_size: 4,
            p_max: 0.2,
            reduction: true,
        }
    }
}

impl ShadeParams {
    pub fn initial_size_for(&self, dimension: usize) -> usize {
        self.initial_size.unwrap_or(self.initial_size_per_dim * dimension)
    }

    pub(crate) fn problems(&self, dimension: usize) -> Vec<String> {
        let mut v = Vec::new();
        if self.memory_size == 0 {
            v.push("lshade.memory_size: must be positive".to_string());
        }
        if !(self.archive_rate >= 0.0 && self.archive_rate.is_finite()) {
            v.push(format!("lshade.archive_rate: must be non-negative, got {}", self.archive_rate));
        }
        if self.min_size < 4 {
            v.push(format!("lshade.min_size: must be at least 4, got {}", self.min_size));
        }
        let n_init = self.initial_size_for(dimension);
        if n_init < self.min_size.max(4) {
            v.push(format!("lshade.initial_size: {n_init} is below the minimum size {}", self.min_size));
        }
        if !(self.p_max > 0.0 && self.p_max <= 1.0) {
            v.push(format!("lshade.p_max: must lie in (0, 1], got {}", self.p_max));
        }
        v
    }
}

/// Success-history memories, archive and population-size schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadeState {
    pub memory_f: Vec<f64>,
    /// `None` marks a terminal slot: every later CR drawn from it is 0.
    pub memory_cr: Vec<Option<f64>>,
    pub memory_index: usize,
    pub archive: Vec<Vec<f64>>,
    pub archive_rate: f64,
    pub n_init: usize,
    pub n_min: usize,
    pub p_max: f64,
    pub max_evaluations: u64,
    pub reduction_enabled: bool,
}

impl ShadeState {
    pub fn new(params: &ShadeParams, dimension: usize, max_evaluations: u64) -> Self {
        Self {
            memory_f: vec![0.5; params.memory_size],
            memory_cr: vec![Some(0.5); params.memory_size],
            memory_index: 0,
            archive: Vec::new(),
            archive_rate: params.archive_rate,
            n_init: params.initial_size_for(dimension),
            n_min: params.min_size,
            p_max: params.p_max,
            max_evaluations,
            reduction_enabled: params.reduction,
        }
    }

    pub fn archive_capacity(&self, population_size: usize) -> usize {
        (self.archive_rate * population_size as f64).round() as usize
    }

    pub fn target_size(&self, evaluations_used: u64) -> usize {
        if self.reduction_enabled {
            lpsr_target_size(self.n_init, self.n_min, evaluations_used, self.max_evaluations)
        } else {
            self.n_init
        }
    }

    /// Insert a defeated parent, evicting a random entry when full.
    fn archive_push<R: Rng + ?Sized>(&mut self, x: Vec<f64>, capacity: usize, rng: &mut R) {
        if capacity == 0 {
            return;
        }
        if self.archive.len() < capacity {
            self.archive.push(x);
        } else {
            let k = rng.random_range(0..self.archive.len());
            self.archive[k] = x;
        }
    }

    fn shrink_archive<R: Rng + ?Sized>(&mut self, capacity: usize, rng: &mut R) {
        while self.archive.len() > capacity {
            let k = rng.random_range(0..self.archive.len());
            self.archive.swap_remove(k);
        }
    }

    /// Write one memory slot from this generation's successes and advance the index.
    pub fn update_memory(&mut self, s_f: &[f64], s_cr: &[f64], improvements: &[f64]) {
        if s_f.is_empty() {
            return;
        }
        let k = self.memory_index;
        let total: f64 = improvements.iter().sum();
        let weights: Vec<f64> = if total > 0.0 && total.is_finite() {
            improvements.iter().map(|d| d / total).collect()
        } else {
            vec![1.0 / s_f.len() as f64; s_f.len()]
        };
        if let Some(m) = lehmer_mean(s_f, &weights) {
            self.memory_f[k] = m;
        }
        let max_cr = s_cr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.memory_cr[k] = match self.memory_cr[k] {
            None => None,
            Some(_) if max_cr == 0.0 => None,
            Some(_) => Some(s_cr.iter().zip(&weights).map(|(c, w)| c * w).sum()),
        };
        self.memory_index = (k + 1) % self.memory_f.len();
    }
}

/// `round(N_init + (N_min - N_init) * used / max)`, with `used / max` capped at 1.
pub fn lpsr_target_size(n_init: usize, n_min: usize, evaluations_used: u64, max_evaluations: u64) -> usize {
    let ratio = if max_evaluations == 0 { 1.0 } else { (evaluations_used as f64 / max_evaluations as f64).min(1.0) };
    let size = n_init as f64 + (n_min as f64 - n_init as f64) * ratio;
    (size.round() as usize).max(n_min)
}

/// Weighted Lehmer mean `sum w x^2 / sum w x`.
pub fn lehmer_mean(values: &[f64], weights: &[f64]) -> Option<f64> {
    let num: f64 = values.iter().zip(weights).map(|(x, w)| w * x * x).sum();
    let den: f64 = values.iter().zip(weights).map(|(x, w)| w * x).sum();
    (den > 0.0).then(|| num / den)
}

/// A Cauchy draw as a scale factor: rejected if not positive, capped at 1.
pub fn truncate_scale_factor(draw: f64) -> Option<f64> {
    (draw > 0.0).then(|| draw.min(1.0))
}

/// `F ~ Cauchy(m_f, 0.1)`, resampled while not positive, truncated to 1.
pub fn sample_scale_factor<R: Rng + ?Sized>(m_f: f64, rng: &mut R) -> f64 {
    let dist = Dist::Cauchy { location: m_f, scale: 0.1 };
    loop {
        if let Some(f) = truncate_scale_factor(dist.sample(rng)) {
            return f;
        }
    }
}

/// `CR ~ Normal(m_cr, 0.1)` clipped to `[0, 1]`; always 0 for a terminal slot.
pub fn sample_crossover_rate<R: Rng + ?Sized>(m_cr: Option<f64>, rng: &mut R) -> f64 {
    match m_cr {
        None => 0.0,
        Some(m) => Dist::Normal { mean: m, std_dev: 0.1 }.sample(rng).clamp(0.0, 1.0),
    }
}

/// One current-to-pbest/1/bin generation with success-history adaptation,
/// archive and (if enabled) linear population size reduction.
pub fn lshade_generation(
    pop: &Population,
    state: &mut ShadeState,
    env: &mut StepEnv<'_, '_>,
    beta_epsilon: f64,
) -> Result<(Population, GenerationReport)> {
    let n_pop = pop.len();
    if n_pop < 4 {
        return Err(Error::InvalidConfig(vec![format!("population: needs at least 4 members, has {n_pop}")]));
    }
    let bounds = env.evaluator.bounds().clone();
    let stats = pop.stats()?;
    let beta = fit_beta_params(&stats, &bounds, beta_epsilon);
    let ranked = pop.ranked_indices();
    let h = state.memory_f.len();
    let capacity = state.archive_capacity(n_pop);

    let mut next = pop.clone();
    let mut report = GenerationReport { tally: ViolationTally::new(bounds.dim()), ..Default::default() };
    let (mut s_f, mut s_cr, mut s_delta) = (Vec::new(), Vec::new(), Vec::new());
    let mut defeated = Vec::new();

    for j in 0..n_pop {
        let rng = &mut *env.rng;
        let slot = rng.random_range(0..h);
        let cr = sample_crossover_rate(state.memory_cr[slot], rng);
        let f = sample_scale_factor(state.memory_f[slot], rng);
        let p_min = 2.0 / n_pop as f64;
        let p = if state.p_max > p_min { rng.random_range(p_min..state.p_max) } else { p_min };
        let top = ((p * n_pop as f64).ceil() as usize).clamp(2, n_pop);
        let pbest = ranked[rng.random_range(0..top)];

        let r1 = loop {
            let r = rng.random_range(0..n_pop);
            if r != j {
                break r;
            }
        };
        let pool = n_pop + state.archive.len();
        let r2 = loop {
            let r = rng.random_range(0..pool);
            if r != j && r != r1 {
                break r;
            }
        };
        let x = &pop.members[j].position;
        let xp = &pop.members[pbest].position;
        let x1 = &pop.members[r1].position;
        let x2 = if r2 < n_pop { &pop.members[r2].position } else { &state.archive[r2 - n_pop] };
        let mutant: Vec<f64> = (0..x.len()).map(|i| x[i] + f * (xp[i] - x[i]) + f * (x1[i] - x2[i])).collect();
        let trial = binomial_crossover(x, &mutant, cr, rng);

        let target = &pop.members[j];
        let ctx = CorrectionContext {
            target: &target.position,
            pbest: xp,
            population_mean: &stats.mean,
            bounds: &bounds,
            beta: &beta,
        };
        if let Some(res) = process_trial(env, trial, target, &ctx, &mut report)? {
            if res.fitness < target.fitness {
                s_f.push(f);
                s_cr.push(cr);
                s_delta.push((target.fitness - res.fitness).abs());
                defeated.push(target.position.clone());
            }
            if res.replaces {
                next.members[j].position = res.position;
                next.members[j].fitness = res.fitness;
            }
        }
        if env.should_stop() {
            report.stopped_early = j + 1 < n_pop;
            break;
        }
    }

    for x in defeated {
        state.archive_push(x, capacity, &mut *env.rng);
    }
    state.update_memory(&s_f, &s_cr, &s_delta);

    next.generation = pop.generation + 1;
    next.evaluations_used = env.evaluator.used();
    let target_size = state.target_size(next.evaluations_used);
    if target_size < next.len() {
        let keep: Vec<usize> = {
            let mut order = next.ranked_indices();
            order.truncate(target_size);
            order.sort_unstable();
            order
        };
        next.members = keep.into_iter().map(|i| next.members[i].clone()).collect();
        let cap = state.archive_capacity(next.len());
        state.shrink_archive(cap, &mut *env.rng);
    }
    env.repairer.end_generation();
    Ok((next, report))
}
