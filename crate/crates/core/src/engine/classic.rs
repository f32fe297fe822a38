use serde::{Deserialize, Serialize};

use super::{binomial_crossover, distinct_indices, process_trial, GenerationReport, StepEnv};
use crate::base::Population;
use crate::bchm::{fit_beta_params, CorrectionContext};
use crate::error::{Error, Result};
use crate::telemetry::ViolationTally;

/// DE/rand/1/bin parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicDEParams {
    pub population_size: usize,
    pub scale_factor: f64,
    pub crossover_rate: f64,
}

impl Default for ClassicDEParams {
    fn default() -> Self {
        Self { population_size: 50, scale_factor: 0.5, crossover_rate: 0.5 }
    }
}

impl ClassicDEParams {
    pub(crate) fn problems(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.population_size < 4 {
            v.push(format!("classic.population_size: must be at least 4, got {}", self.population_size));
        }
        if !(0.0..=2.0).contains(&self.scale_factor) {
            v.push(format!("classic.scale_factor: must lie in [0, 2], got {}", self.scale_factor));
        }
        if !(0.0..1.0).contains(&self.crossover_rate) {
            v.push(format!("classic.crossover_rate: must lie in [0, 1), got {}", self.crossover_rate));
        }
        v
    }
}

/// `x_r1 + F (x_r2 - x_r3)`.
pub fn rand1_mutant(x_r1: &[f64], x_r2: &[f64], x_r3: &[f64], f: f64) -> Vec<f64> {
    x_r1.iter().zip(x_r2).zip(x_r3).map(|((a, b), c)| a + f * (b - c)).collect()
}

/// One DE/rand/1/bin generation. Selection is synchronous: mutants are built
/// from the parent population, winners go into the next one.
pub fn classic_generation(
    pop: &Population,
    params: &ClassicDEParams,
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
    let best = pop.best_index().expect("non-empty population");

    let mut next = pop.clone();
    let mut report = GenerationReport { tally: ViolationTally::new(bounds.dim()), ..Default::default() };
    for j in 0..n_pop {
        let idx = distinct_indices(n_pop, j, 3, &mut *env.rng);
        let (x1, x2, x3) =
            (&pop.members[idx[0]].position, &pop.members[idx[1]].position, &pop.members[idx[2]].position);
        let mutant = rand1_mutant(x1, x2, x3, params.scale_factor);
        let target = &pop.members[j];
        let trial = binomial_crossover(&target.position, &mutant, params.crossover_rate, &mut *env.rng);
        let ctx = CorrectionContext {
            target: &target.position,
            pbest: &pop.members[best].position,
            population_mean: &stats.mean,
            bounds: &bounds,
            beta: &beta,
        };
        if let Some(res) = process_trial(env, trial, target, &ctx, &mut report)? {
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
    next.generation = pop.generation + 1;
    next.evaluations_used = env.evaluator.used();
    env.repairer.end_generation();
    Ok((next, report))
}
