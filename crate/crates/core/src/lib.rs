//! Differential evolution with pluggable bound constraint handling.
//!
//! - [`benchmarks`]: strict-box test problems (`+inf` outside the box).
//! - [`bchm`]: corrections that map infeasible trial vectors back into the box.
//! - [`engine`]: DE/rand/1/bin and L-SHADE generational loops.
//! - [`telemetry`]: per-generation violation ratios and end-of-run classes.
//! - [`analysis`]: trajectory similarity, complete-linkage clustering, ranking.
//! - [`experiment`]: config files, sweeps, manifests and reports.

pub mod analysis;
pub mod base;
pub mod bchm;
pub mod benchmarks;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod par;
pub mod rng;
pub mod telemetry;

pub use base::{population_stats, violation_profile, Bounds, Individual, Population, PopulationStats};
pub use bchm::{BchmChoice, CorrectionContext, CorrectionOutcome, Method, Repair};
pub use benchmarks::{BenchmarkProblem, FunctionId, Mode, Objective, ProblemRegistry};
pub use engine::{run, EngineConfig, RunConfig, RunResult};
pub use error::{Error, Result};
pub use par::Execution;
pub use rng::{Dist, RngStream};
pub use telemetry::{classify, BehaviourClass, ClassifierConfig, GenerationRecord, Trajectory};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
