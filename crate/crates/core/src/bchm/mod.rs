//! Bound constraint handling methods (BCHMs).
//!
//! Every method maps an infeasible trial vector to a feasible one, or discards
//! it ([`Method::Dismiss`]). Feasible input is always returned unchanged.
//! Component-wise methods touch only the violated components; vector-wise
//! methods move the whole vector along the segment towards a reference point.

mod adaptive;
mod beta;
mod component;
mod vector;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::base::{violation_count, Bounds};
use crate::error::{Error, Result};

pub use adaptive::{AdaptiveParams, AdaptiveState};
pub use beta::{beta_correct, fit_beta_params, BetaFitParams, DEFAULT_EPSILON};
pub use component::{
    exp_confined, exp_confined_component, mirror, mirror_component, saturate, uniform_resample,
};
pub use vector::{vector_alpha, vector_correct};

#[derive(Debug, Clone, PartialEq)]
pub enum Repair {
    Corrected(Vec<f64>),
    Dismissed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionOutcome {
    pub result: Repair,
    /// Components whose value differs from the input.
    pub components_corrected: usize,
    /// Scaling factor of a vector-wise correction, in `[0, 1]`.
    pub vector_alpha: Option<f64>,
}

impl CorrectionOutcome {
    pub(crate) fn unchanged(y: &[f64]) -> Self {
        Self { result: Repair::Corrected(y.to_vec()), components_corrected: 0, vector_alpha: None }
    }

    pub(crate) fn corrected(original: &[f64], c: Vec<f64>) -> Self {
        let changed = original.iter().zip(&c).filter(|(a, b)| a != b).count();
        Self { result: Repair::Corrected(c), components_corrected: changed, vector_alpha: None }
    }

    pub fn corrected_vector(&self) -> Option<&[f64]> {
        match &self.result {
            Repair::Corrected(c) => Some(c),
            Repair::Dismissed => None,
        }
    }

    pub fn into_vector(self) -> Option<Vec<f64>> {
        match self.result {
            Repair::Corrected(c) => Some(c),
            Repair::Dismissed => None,
        }
    }

    pub fn is_dismissed(&self) -> bool {
        matches!(self.result, Repair::Dismissed)
    }
}

/// Which feasible point a reference-based method pulls towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reference {
    /// The trial's own target individual.
    Target,
    /// A p-best individual (population best for classic DE).
    PBest,
    /// Population mean.
    Midpoint,
}

/// Everything a correction may consult besides the trial itself.
#[derive(Debug, Clone, Copy)]
pub struct CorrectionContext<'a> {
    pub target: &'a [f64],
    pub pbest: &'a [f64],
    pub population_mean: &'a [f64],
    pub bounds: &'a Bounds,
    pub beta: &'a BetaFitParams,
}

impl CorrectionContext<'_> {
    pub fn reference(&self, which: Reference) -> &[f64] {
        match which {
            Reference::Target => self.target,
            Reference::PBest => self.pbest,
            Reference::Midpoint => self.population_mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Saturation,
    Mirror,
    Uniform,
    Beta,
    ExpTarget,
    ExpBest,
    ExpMidpoint,
    VectorTarget,
    VectorBest,
    VectorMidpoint,
    Dismiss,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Saturation,
        Method::Mirror,
        Method::Uniform,
        Method::Beta,
        Method::ExpTarget,
        Method::ExpBest,
        Method::ExpMidpoint,
        Method::VectorTarget,
        Method::VectorBest,
        Method::VectorMidpoint,
        Method::Dismiss,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Saturation => "sat",
            Method::Mirror => "mirror",
            Method::Uniform => "uniform",
            Method::Beta => "beta",
            Method::ExpTarget => "expTarget",
            Method::ExpBest => "expBest",
            Method::ExpMidpoint => "expMidpoint",
            Method::VectorTarget => "vectorTarget",
            Method::VectorBest => "vectorBest",
            Method::VectorMidpoint => "vectorMidpoint",
            Method::Dismiss => "dismiss",
        }
    }

    pub fn reference(self) -> Option<Reference> {
        match self {
            Method::ExpTarget | Method::VectorTarget => Some(Reference::Target),
            Method::ExpBest | Method::VectorBest => Some(Reference::PBest),
            Method::ExpMidpoint | Method::VectorMidpoint => Some(Reference::Midpoint),
            _ => None,
        }
    }

    pub fn is_vector_wise(self) -> bool {
        matches!(self, Method::VectorTarget | Method::VectorBest | Method::VectorMidpoint)
    }

    /// Repair `y`. Feasible input comes back unchanged and consumes no randomness.
    pub fn correct<R: Rng + ?Sized>(
        self,
        y: &[f64],
        ctx: &CorrectionContext<'_>,
        rng: &mut R,
    ) -> Result<CorrectionOutcome> {
        let bounds = ctx.bounds;
        bounds.check_dim(y)?;
        if violation_count(y, bounds) == 0 {
            let mut out = CorrectionOutcome::unchanged(y);
            if self.is_vector_wise() {
                out.vector_alpha = Some(1.0);
            }
            return Ok(out);
        }
        match self {
            Method::Saturation => Ok(saturate(y, bounds)),
            Method::Mirror => Ok(mirror(y, bounds)),
            Method::Uniform => Ok(uniform_resample(y, bounds, rng)),
            Method::Beta => Ok(beta_correct(y, bounds, ctx.beta, rng)),
            Method::ExpTarget | Method::ExpBest | Method::ExpMidpoint => {
                let r = ctx.reference(self.reference().expect("reference method"));
                exp_confined(y, bounds, r, rng)
            }
            Method::VectorTarget | Method::VectorBest | Method::VectorMidpoint => {
                let r = ctx.reference(self.reference().expect("reference method"));
                vector_correct(y, r, bounds)
            }
            Method::Dismiss => Ok(dismiss(y, bounds)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Death penalty: infeasible trials are discarded, feasible ones pass through.
pub fn dismiss(y: &[f64], bounds: &Bounds) -> CorrectionOutcome {
    if violation_count(y, bounds) == 0 {
        CorrectionOutcome::unchanged(y)
    } else {
        CorrectionOutcome { result: Repair::Dismissed, components_corrected: 0, vector_alpha: None }
    }
}

/// A fixed method, or per-trial stochastic selection from the adaptive pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BchmChoice {
    Fixed(Method),
    Adaptive,
}

impl BchmChoice {
    pub fn id(self) -> &'static str {
        match self {
            BchmChoice::Fixed(m) => m.id(),
            BchmChoice::Adaptive => "adaptive",
        }
    }

    /// Every accepted id, in a stable order.
    pub fn all_ids() -> impl Iterator<Item = &'static str> {
        Method::ALL.into_iter().map(Method::id).chain(std::iter::once("adaptive"))
    }
}

impl fmt::Display for BchmChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BchmChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "adaptive" {
            Ok(BchmChoice::Adaptive)
        } else {
            s.parse().map(BchmChoice::Fixed)
        }
    }
}

impl TryFrom<String> for BchmChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BchmChoice> for String {
    fn from(c: BchmChoice) -> String {
        c.id().to_string()
    }
}
