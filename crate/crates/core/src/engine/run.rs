use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{
    classic_generation, lshade_generation, ClassicDEParams, EngineKind, GenerationReport, Repairer, ShadeParams,
    ShadeState, StepEnv,
};
use crate::base::{Individual, Population, PopulationStats};
use crate::bchm::{AdaptiveParams, BchmChoice, DEFAULT_EPSILON};
use crate::benchmarks::{Objective, StrictEvaluator};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::telemetry::{
    classify, classify_variance_only, record_from_tally, BehaviourClass, ClassifierConfig, GenerationRecord,
    Trajectory, ViolationTally,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EngineConfig {
    Classic(ClassicDEParams),
    Lshade(ShadeParams),
}

impl EngineConfig {
    pub fn kind(&self) -> EngineKind {
        match self {
            EngineConfig::Classic(_) => EngineKind::Classic,
            EngineConfig::Lshade(_) => EngineKind::Lshade,
        }
    }

    pub fn defaults_for(kind: EngineKind) -> Self {
        match kind {
            EngineKind::Classic => EngineConfig::Classic(ClassicDEParams::default()),
            EngineKind::Lshade => EngineConfig::Lshade(ShadeParams::default()),
        }
    }

    fn initial_size(&self, dimension: usize) -> usize {
        match self {
            EngineConfig::Classic(p) => p.population_size,
            EngineConfig::Lshade(p) => p.initial_size_for(dimension),
        }
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig::Classic(ClassicDEParams::default())
    }
}

/// Everything needed to reproduce one optimisation run.
#[derive(Clone)]
pub struct RunConfig {
    pub problem: Arc<dyn Objective>,
    pub engine: EngineConfig,
    pub bchm: BchmChoice,
    pub adaptive: AdaptiveParams,
    pub beta_epsilon: f64,
    /// Charged evaluations; `10000 n` by default.
    pub budget: u64,
    /// Stop once best fitness is within this distance of the known optimum.
    pub target_error: Option<f64>,
    pub seed: u64,
    /// Charge infeasible (dismissed) trials against the budget.
    pub count_infeasible_evals: bool,
    pub classifier: ClassifierConfig,
    pub max_generations: Option<u64>,
    /// Stop after this many consecutive generations that charge no evaluation.
    pub stall_generations: u64,
}

impl fmt::Debug for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunConfig")
            .field("problem", &self.problem.name())
            .field("engine", &self.engine)
            .field("bchm", &self.bchm)
            .field("budget", &self.budget)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl RunConfig {
    pub fn new(problem: Arc<dyn Objective>, engine: EngineConfig, bchm: BchmChoice, seed: u64) -> Self {
        let budget = 10_000 * problem.dimension() as u64;
        Self {
            problem,
            engine,
            bchm,
            adaptive: AdaptiveParams::default(),
            beta_epsilon: DEFAULT_EPSILON,
            budget,
            target_error: None,
            seed,
            count_infeasible_evals: false,
            classifier: ClassifierConfig::default(),
            max_generations: None,
            stall_generations: 1000,
        }
    }

    /// Every problem with the configuration, one message per offending field.
    pub fn problems(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.problem.dimension();
        if self.budget == 0 {
            v.push("budget must be positive".to_string());
        }
        match &self.engine {
            EngineConfig::Classic(p) => v.extend(p.problems()),
            EngineConfig::Lshade(p) => v.extend(p.problems(n)),
        }
        if !(self.beta_epsilon > 0.0 && self.beta_epsilon < 0.5) {
            v.push(format!("beta_epsilon: must lie in (0, 0.5), got {}", self.beta_epsilon));
        }
        if self.target_error.is_some_and(|t| t.is_nan() || t < 0.0) {
            v.push("target_error: must be non-negative".to_string());
        }
        if !(self.classifier.error_threshold > 0.0 && self.classifier.variance_threshold > 0.0) {
            v.push("classifier: thresholds must be positive".to_string());
        }
        if self.stall_generations == 0 {
            v.push("stall_generations: must be positive".to_string());
        }
        if self.bchm == BchmChoice::Adaptive {
            if let Err(Error::InvalidConfig(msgs)) =
                crate::bchm::AdaptiveState::new(self.adaptive)
            {
                v.extend(msgs);
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.problems();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    /// Best fitness minus the optimum value (raw best fitness if unknown).
    pub final_best_error: f64,
    pub final_best_fitness: f64,
    pub best_position: Vec<f64>,
    pub final_stats: PopulationStats,
    pub final_population_size: usize,
    pub generations: u64,
    pub feasible_evaluations: u64,
    pub infeasible_calls: u64,
    pub behaviour: BehaviourClass,
    /// The optimum value is unknown, so only convergence was judged.
    pub classification_degraded: bool,
    pub final_adaptive_probabilities: Option<Vec<f64>>,
    pub trajectory: Trajectory,
}

pub fn run(config: &RunConfig) -> Result<RunResult> {
    run_observed(config, &mut |_| {})
}

/// [`run`], handing each generation record to `observer` as it is produced.
pub fn run_observed(config: &RunConfig, observer: &mut dyn FnMut(&GenerationRecord)) -> Result<RunResult> {
    config.validate()?;
    let problem: &dyn Objective = config.problem.as_ref();
    let bounds = problem.bounds();
    let dimension = bounds.dim();
    let f_star = problem.optimum_value();

    let root = RngStream::new(config.seed);
    let mut init_rng = root.split_str("init");
    let mut evo_rng = root.split_str("evolve");
    let mut repairer = Repairer::new(config.bchm, config.adaptive, root.split_str("bchm"))?;
    let mut evaluator = StrictEvaluator::new(problem, config.count_infeasible_evals);
    let mut env = StepEnv {
        evaluator: &mut evaluator,
        repairer: &mut repairer,
        rng: &mut evo_rng,
        budget: config.budget,
        target_fitness: match (config.target_error, f_star) {
            (Some(t), Some(f)) => Some(f + t),
            _ => None,
        },
        target_reached: false,
    };

    let n_init = config.engine.initial_size(dimension);
    let mut members = Vec::with_capacity(n_init);
    for _ in 0..n_init {
        let mut x: Vec<f64> =
            (0..dimension).map(|i| bounds.lower()[i] + bounds.width(i) * init_rng.unit()).collect();
        bounds.clamp_in_place(&mut x);
        members.push(Individual::unevaluated(x));
    }
    for m in &mut members {
        if env.should_stop() {
            break;
        }
        m.fitness = env.evaluate(&m.position)?;
    }
    let mut pop = Population::new(members);
    pop.evaluations_used = env.evaluator.used();

    let mut shade = match &config.engine {
        EngineConfig::Lshade(p) => Some(ShadeState::new(p, dimension, config.budget)),
        EngineConfig::Classic(_) => None,
    };

    let mut trajectory = Trajectory::default();
    let mut record = |pop: &Population, report: &GenerationReport, env: &StepEnv<'_, '_>| -> Result<()> {
        let mut rec = record_from_tally(&report.tally, pop, f_star)?;
        rec.feasible_evaluations = env.evaluator.feasible_evaluations();
        rec.corrections_applied = report.corrections_applied;
        rec.adaptive_probabilities = env.repairer.adaptive().map(|a| a.probabilities.clone());
        observer(&rec);
        trajectory.push(rec);
        Ok(())
    };
    record(&pop, &GenerationReport { tally: ViolationTally::new(dimension), ..Default::default() }, &env)?;

    let mut stalled = 0u64;
    while !env.should_stop()
        && config.max_generations.is_none_or(|g| pop.generation < g)
        && stalled < config.stall_generations
    {
        let used_before = env.evaluator.used();
        let (next, report) = match (&config.engine, shade.as_mut()) {
            (EngineConfig::Classic(p), _) => classic_generation(&pop, p, &mut env, config.beta_epsilon)?,
            (EngineConfig::Lshade(_), Some(state)) => lshade_generation(&pop, state, &mut env, config.beta_epsilon)?,
            (EngineConfig::Lshade(_), None) => unreachable!("shade state exists for lshade runs"),
        };
        pop = next;
        stalled = if env.evaluator.used() == used_before { stalled + 1 } else { 0 };
        record(&pop, &report, &env)?;
    }

    let stats = pop.stats()?;
    let best = pop.best_index().ok_or(Error::EmptyPopulation)?;
    let best_fitness = pop.members[best].fitness;
    let final_best_error = f_star.map_or(best_fitness, |f| best_fitness - f);
    let variance = stats.max_variance();
    let (behaviour, degraded) = match f_star {
        Some(_) => (classify(final_best_error, variance, &config.classifier), false),
        None => (classify_variance_only(variance, &config.classifier), true),
    };
    Ok(RunResult {
        final_best_error,
        final_best_fitness: best_fitness,
        best_position: pop.members[best].position.clone(),
        final_population_size: pop.len(),
        final_stats: stats,
        generations: pop.generation,
        feasible_evaluations: env.evaluator.feasible_evaluations(),
        infeasible_calls: env.evaluator.infeasible_calls(),
        behaviour,
        classification_degraded: degraded,
        final_adaptive_probabilities: env.repairer.adaptive().map(|a| a.probabilities.clone()),
        trajectory,
    })
}
