//! Generational DE loops with trial repair between crossover and evaluation.

mod classic;
mod lshade;
mod run;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::base::{violation_count, Individual};
use crate::bchm::{AdaptiveParams, AdaptiveState, BchmChoice, CorrectionContext, Repair};
use crate::benchmarks::StrictEvaluator;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::telemetry::ViolationTally;

pub use classic::{classic_generation, rand1_mutant, ClassicDEParams};
pub use lshade::{
    lehmer_mean, lpsr_target_size, lshade_generation, sample_crossover_rate, sample_scale_factor,
    truncate_scale_factor, ShadeParams, ShadeState,
};
pub use run::{run, run_observed, EngineConfig, RunConfig, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Classic,
    Lshade,
}

impl EngineKind {
    pub const ALL: [EngineKind; 2] = [EngineKind::Classic, EngineKind::Lshade];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Classic => "classic",
            EngineKind::Lshade => "lshade",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EngineKind::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(vec![format!("engine: unknown engine `{s}`")]))
    }
}

/// Applies the configured BCHM to infeasible trials and tracks adaptive
/// selection statistics. Draws from its own stream, so the evolutionary
/// draws do not depend on which method is in use.
#[derive(Debug, Clone)]
pub struct Repairer {
    choice: BchmChoice,
    adaptive: Option<AdaptiveState>,
    rng: RngStream,
}

/// A repaired (or untouched) trial, or nothing if it was dismissed.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairedTrial {
    pub position: Option<Vec<f64>>,
    pub was_infeasible: bool,
    /// Adaptive pool slot that produced the correction.
    pub pool_slot: Option<usize>,
}

impl Repairer {
    pub fn new(choice: BchmChoice, adaptive: AdaptiveParams, rng: RngStream) -> Result<Self> {
        let adaptive = match choice {
            BchmChoice::Adaptive => Some(AdaptiveState::new(adaptive)?),
            BchmChoice::Fixed(_) => None,
        };
        Ok(Self { choice, adaptive, rng })
    }

    pub fn choice(&self) -> BchmChoice {
        self.choice
    }

    pub fn adaptive(&self) -> Option<&AdaptiveState> {
        self.adaptive.as_ref()
    }

    pub fn repair(&mut self, trial: Vec<f64>, ctx: &CorrectionContext<'_>) -> Result<RepairedTrial> {
        if violation_count(&trial, ctx.bounds) == 0 {
            return Ok(RepairedTrial { position: Some(trial), was_infeasible: false, pool_slot: None });
        }
        let (method, slot) = match (&mut self.adaptive, self.choice) {
            (Some(state), _) => {
                let (k, m) = state.select(&mut self.rng);
                (m, Some(k))
            }
            (None, BchmChoice::Fixed(m)) => (m, None),
            (None, BchmChoice::Adaptive) => unreachable!("adaptive state is built with the repairer"),
        };
        let out = method.correct(&trial, ctx, &mut self.rng)?;
        let position = match out.result {
            Repair::Corrected(c) => Some(c),
            Repair::Dismissed => None,
        };
        Ok(RepairedTrial { position, was_infeasible: true, pool_slot: slot })
    }

    pub fn record_success(&mut self, slot: usize) {
        if let Some(state) = &mut self.adaptive {
            state.record_success(slot);
        }
    }

    pub fn end_generation(&mut self) {
        if let Some(state) = &mut self.adaptive {
            state.end_generation();
        }
    }
}

/// Per-run mutable state a generation step works against.
pub struct StepEnv<'p, 'e> {
    pub evaluator: &'e mut StrictEvaluator<'p>,
    pub repairer: &'e mut Repairer,
    /// Evolutionary draws (indices, crossover, parameters).
    pub rng: &'e mut RngStream,
    /// Budget in charged evaluations.
    pub budget: u64,
    /// Stop once a fitness at or below this value is seen.
    pub target_fitness: Option<f64>,
    pub target_reached: bool,
}

impl StepEnv<'_, '_> {
    pub fn should_stop(&self) -> bool {
        self.target_reached || self.evaluator.used() >= self.budget
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        let f = self.evaluator.evaluate(x)?;
        if self.target_fitness.is_some_and(|t| f <= t) {
            self.target_reached = true;
        }
        Ok(f)
    }
}

/// What one generation did, for telemetry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationReport {
    /// Measured on trials before any correction.
    pub tally: ViolationTally,
    pub corrections_applied: u64,
    pub successes: u64,
    /// The budget or target ran out part-way through.
    pub stopped_early: bool,
}

/// Outcome of pushing one trial through repair, evaluation and selection.
pub(crate) struct TrialResult {
    pub fitness: f64,
    pub position: Vec<f64>,
    /// Trial replaces the target (`<=`).
    pub replaces: bool,
}

/// Repair, evaluate and compare a trial against its target. Records the
/// pre-correction violation counts and adaptive successes.
pub(crate) fn process_trial(
    env: &mut StepEnv<'_, '_>,
    trial: Vec<f64>,
    target: &Individual,
    ctx: &CorrectionContext<'_>,
    report: &mut GenerationReport,
) -> Result<Option<TrialResult>> {
    report.tally.add(&trial, ctx.bounds);
    let repaired = env.repairer.repair(trial, ctx)?;
    if repaired.was_infeasible {
        report.corrections_applied += 1;
    }
    let Some(position) = repaired.position else {
        env.evaluator.charge_discarded();
        return Ok(None);
    };
    let fitness = env.evaluate(&position)?;
    let replaces = fitness <= target.fitness;
    if replaces {
        report.successes += 1;
        if let Some(slot) = repaired.pool_slot {
            env.repairer.record_success(slot);
        }
    }
    Ok(Some(TrialResult { fitness, position, replaces }))
}

/// Binomial crossover: component `i` comes from the mutant when `u_i < cr` or `i == j_rand`.
pub fn binomial_crossover<R: Rng + ?Sized>(target: &[f64], mutant: &[f64], cr: f64, rng: &mut R) -> Vec<f64> {
    let n = target.len();
    let j_rand = rng.random_range(0..n);
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(i, (&t, &m))| {
            let u: f64 = rng.random();
            if u < cr || i == j_rand {
                m
            } else {
                t
            }
        })
        .collect()
}

/// `k` distinct indices from `0..n`, all different from `exclude`.
pub(crate) fn distinct_indices<R: Rng + ?Sized>(n: usize, exclude: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let r = rng.random_range(0..n);
        if r != exclude && !out.contains(&r) {
            out.push(r);
        }
    }
    out
}
