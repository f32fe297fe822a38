//! Strict-box benchmark problems.
//!
//! All built-in problems live on `[-5, 5]^n`. Fitness outside the closed box is
//! `+inf`, and in [`Mode::Sbox`] the optimum may be placed anywhere in the box,
//! arbitrarily close to its faces.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::base::Bounds;
use crate::error::{Error, Result};
use crate::rng::{str_key, RngStream};

pub const DOMAIN_LOWER: f64 = -5.0;
pub const DOMAIN_UPPER: f64 = 5.0;
/// Optima of BBOB-like and exempt instances stay in `[-4, 4]^n`.
pub const INNER_LIMIT: f64 = 4.0;
pub const OFFSET_RANGE: f64 = 100.0;

const INSTANCE_SEED: u64 = 0x5B0C_C057_0000_0001;

/// A minimisation problem over a box. Implement this to plug external problems in.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn bounds(&self) -> &Bounds;

    fn dimension(&self) -> usize {
        self.bounds().dim()
    }

    /// Objective value at a point inside the box. Never called on infeasible points.
    fn evaluate(&self, x: &[f64]) -> f64;

    fn optimum_value(&self) -> Option<f64> {
        None
    }
}

/// Strict-box evaluation: `+inf` outside the closed box, the objective inside.
pub fn evaluate_strict(problem: &dyn Objective, x: &[f64]) -> Result<f64> {
    let bounds = problem.bounds();
    bounds.check_dim(x)?;
    if bounds.contains(x) {
        Ok(problem.evaluate(x))
    } else {
        Ok(f64::INFINITY)
    }
}

/// Per-run evaluation counter around a strict-box objective.
///
/// Infeasible points are never passed to the objective. Whether they consume
/// budget is controlled by `count_infeasible`.
pub struct StrictEvaluator<'a> {
    problem: &'a dyn Objective,
    count_infeasible: bool,
    feasible: u64,
    infeasible: u64,
}

impl<'a> StrictEvaluator<'a> {
    pub fn new(problem: &'a dyn Objective, count_infeasible: bool) -> Self {
        Self { problem, count_infeasible, feasible: 0, infeasible: 0 }
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        let bounds = self.problem.bounds();
        bounds.check_dim(x)?;
        if bounds.contains(x) {
            self.feasible += 1;
            Ok(self.problem.evaluate(x))
        } else {
            self.infeasible += 1;
            Ok(f64::INFINITY)
        }
    }

    pub fn problem(&self) -> &'a dyn Objective {
        self.problem
    }

    pub fn bounds(&self) -> &'a Bounds {
        self.problem.bounds()
    }

    /// Account for a candidate discarded without evaluation.
    pub fn charge_discarded(&mut self) {
        self.infeasible += 1;
    }

    pub fn feasible_evaluations(&self) -> u64 {
        self.feasible
    }

    pub fn infeasible_calls(&self) -> u64 {
        self.infeasible
    }

    /// Evaluations charged against the budget.
    pub fn used(&self) -> u64 {
        if self.count_infeasible {
            self.feasible + self.infeasible
        } else {
            self.feasible
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionId {
    Sphere,
    SeparableEllipsoid,
    Rastrigin,
    LinearSlope,
    Rosenbrock,
    DifferentPowers,
}

impl FunctionId {
    pub const ALL: [FunctionId; 6] = [
        FunctionId::Sphere,
        FunctionId::SeparableEllipsoid,
        FunctionId::Rastrigin,
        FunctionId::LinearSlope,
        FunctionId::Rosenbrock,
        FunctionId::DifferentPowers,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionId::Sphere => "sphere",
            FunctionId::SeparableEllipsoid => "separable_ellipsoid",
            FunctionId::Rastrigin => "rastrigin",
            FunctionId::LinearSlope => "linear_slope",
            FunctionId::Rosenbrock => "rosenbrock",
            FunctionId::DifferentPowers => "different_powers",
        }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Optimum anywhere in `[-5, 5]^n`.
    Sbox,
    /// Optimum kept in `[-4, 4]^n`.
    BbobLike,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sbox => "sbox",
            Mode::BbobLike => "bbob_like",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sbox" => Ok(Mode::Sbox),
            "bbob_like" => Ok(Mode::BbobLike),
            other => Err(Error::InvalidConfig(vec![format!("mode: unknown mode `{other}`")])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub id: FunctionId,
    pub formula: &'static str,
    /// Exempt functions keep their optimum in `[-4, 4]^n` even in SBOX mode.
    pub exempt_from_boundary_shift: bool,
}

#[derive(Debug, Clone)]
pub struct FunctionCatalog {
    entries: BTreeMap<FunctionId, CatalogEntry>,
}

impl FunctionCatalog {
    pub fn standard() -> Self {
        let table = [
            (FunctionId::Sphere, "sum z_i^2", false),
            (FunctionId::SeparableEllipsoid, "sum 10^(6(i-1)/(n-1)) z_i^2", false),
            (FunctionId::Rastrigin, "10(n - sum cos(2 pi z_i)) + sum z_i^2", false),
            (
                FunctionId::LinearSlope,
                "sum 10^((i-1)/(n-1)) (x*_i - x_i) sign(x*_i), x* a corner",
                true,
            ),
            (
                FunctionId::Rosenbrock,
                "sum_{i<n} 100(z_i^2 - z_{i+1})^2 + (z_i - 1)^2, z = x - x* + 1",
                false,
            ),
            (FunctionId::DifferentPowers, "sum |z_i|^(2 + 4(i-1)/(n-1))", false),
        ];
        let entries = table
            .into_iter()
            .map(|(id, formula, exempt)| {
                (id, CatalogEntry { id, formula, exempt_from_boundary_shift: exempt })
            })
            .collect();
        Self { entries }
    }

    pub fn get(&self, id: FunctionId) -> &CatalogEntry {
        &self.entries[&id]
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }
}

/// `exponent_scale * (i - 1) / (n - 1)` for 1-based `i`; 0 in one dimension.
fn ramp(i: usize, n: usize, exponent_scale: f64) -> f64 {
    if n <= 1 {
        0.0
    } else {
        exponent_scale * i as f64 / (n - 1) as f64
    }
}

fn is_corner(x: &[f64]) -> bool {
    x.iter().all(|&v| v == DOMAIN_LOWER || v == DOMAIN_UPPER)
}

/// Linear slope with a corner optimum: zero at `corner`, positive elsewhere in the box.
pub fn raw_linear_slope(x: &[f64], corner: &[f64]) -> Result<f64> {
    if x.len() != corner.len() {
        return Err(Error::DimensionMismatch { expected: corner.len(), got: x.len() });
    }
    if !is_corner(corner) {
        return Err(Error::LinearSlopeCorner);
    }
    Ok(linear_slope_unchecked(x, corner))
}

fn linear_slope_unchecked(x: &[f64], corner: &[f64]) -> f64 {
    let n = x.len();
    x.iter()
        .zip(corner)
        .enumerate()
        .map(|(i, (&xi, &ci))| 10f64.powf(ramp(i, n, 1.0)) * (ci - xi) * ci.signum())
        .sum()
}

/// Raw formula on shifted coordinates `z`. Linear slope is not a function of `z`.
fn raw_shifted(id: FunctionId, z: &[f64]) -> f64 {
    let n = z.len();
    match id {
        FunctionId::Sphere => z.iter().map(|v| v * v).sum(),
        FunctionId::SeparableEllipsoid => z
            .iter()
            .enumerate()
            .map(|(i, v)| 10f64.powf(ramp(i, n, 6.0)) * v * v)
            .sum(),
        FunctionId::Rastrigin => {
            let cos_sum: f64 = z.iter().map(|v| (2.0 * PI * v).cos()).sum();
            let sq: f64 = z.iter().map(|v| v * v).sum();
            10.0 * (n as f64 - cos_sum) + sq
        }
        FunctionId::Rosenbrock => z
            .windows(2)
            .map(|w| {
                let a = w[0] * w[0] - w[1];
                let b = w[0] - 1.0;
                100.0 * a * a + b * b
            })
            .sum(),
        FunctionId::DifferentPowers => z
            .iter()
            .enumerate()
            .map(|(i, v)| v.abs().powf(2.0 + ramp(i, n, 4.0)))
            .sum(),
        FunctionId::LinearSlope => unreachable!("linear slope is evaluated against its corner"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProblem {
    pub function: FunctionId,
    pub instance: u64,
    pub dimension: usize,
    pub mode: Mode,
    pub bounds: Bounds,
    pub optimum_location: Vec<f64>,
    pub optimum_value: f64,
    name: String,
}

impl BenchmarkProblem {
    /// Seeded instance; a pure function of its arguments.
    pub fn make_instance(function: FunctionId, instance: u64, dimension: usize, mode: Mode) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidConfig(vec![format!(
                "dimension: must be at least 2, got {dimension}"
            )]));
        }
        let mut rng = RngStream::with_path(
            INSTANCE_SEED,
            vec![str_key(function.as_str()), instance, dimension as u64, str_key(mode.as_str())],
        );
        let exempt = FunctionCatalog::standard().get(function).exempt_from_boundary_shift;

        let optimum_location: Vec<f64> = if function == FunctionId::LinearSlope {
            (0..dimension)
                .map(|_| if rng.unit() < 0.5 { DOMAIN_LOWER } else { DOMAIN_UPPER })
                .collect()
        } else {
            let limit = if mode == Mode::Sbox && !exempt { DOMAIN_UPPER } else { INNER_LIMIT };
            (0..dimension).map(|_| -limit + 2.0 * limit * rng.unit()).collect()
        };
        let optimum_value = -OFFSET_RANGE + 2.0 * OFFSET_RANGE * rng.unit();
        Self::build(function, instance, mode, optimum_location, optimum_value)
    }

    /// Problem with a caller-chosen optimum location and value.
    pub fn with_optimum(
        function: FunctionId,
        mode: Mode,
        optimum_location: Vec<f64>,
        optimum_value: f64,
    ) -> Result<Self> {
        Self::build(function, 0, mode, optimum_location, optimum_value)
    }

    fn build(
        function: FunctionId,
        instance: u64,
        mode: Mode,
        optimum_location: Vec<f64>,
        optimum_value: f64,
    ) -> Result<Self> {
        let dimension = optimum_location.len();
        let bounds = Bounds::uniform(dimension, DOMAIN_LOWER, DOMAIN_UPPER)?;
        if !bounds.contains(&optimum_location) {
            return Err(Error::InvalidConfig(vec!["optimum: location must lie in [-5, 5]^n".into()]));
        }
        if function == FunctionId::LinearSlope && !is_corner(&optimum_location) {
            return Err(Error::LinearSlopeCorner);
        }
        let name = format!("{function}_i{instance}_d{dimension}_{mode}");
        Ok(Self { function, instance, dimension, mode, bounds, optimum_location, optimum_value, name })
    }

    pub fn evaluate_strict(&self, x: &[f64]) -> Result<f64> {
        evaluate_strict(self, x)
    }

    fn raw(&self, x: &[f64]) -> f64 {
        match self.function {
            FunctionId::LinearSlope => linear_slope_unchecked(x, &self.optimum_location),
            FunctionId::Rosenbrock => {
                let z: Vec<f64> =
                    x.iter().zip(&self.optimum_location).map(|(a, b)| a - b + 1.0).collect();
                raw_shifted(self.function, &z)
            }
            f => {
                let z: Vec<f64> = x.iter().zip(&self.optimum_location).map(|(a, b)| a - b).collect();
                raw_shifted(f, &z)
            }
        }
    }
}

impl Objective for BenchmarkProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        self.raw(x) + self.optimum_value
    }

    fn optimum_value(&self) -> Option<f64> {
        Some(self.optimum_value)
    }
}

/// Where a built-in problem puts its optimum.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimumPlacement {
    /// Seeded from the instance id.
    #[default]
    Instance,
    /// Box centre, optimum value 0.
    Center,
    /// Explicit location, optimum value 0.
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRequest {
    pub function: String,
    pub instance: u64,
    pub dimension: usize,
    pub mode: Mode,
    pub placement: OptimumPlacement,
}

pub type ProblemFactory = dyn Fn(&ProblemRequest) -> Result<Arc<dyn Objective>> + Send + Sync;

/// Name -> problem factory. Pre-populated with the built-in catalogue.
pub struct ProblemRegistry {
    factories: BTreeMap<String, Box<ProblemFactory>>,
}

impl ProblemRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        for id in FunctionId::ALL {
            reg.register(id.as_str(), move |req| {
                let p = match &req.placement {
                    OptimumPlacement::Instance => {
                        BenchmarkProblem::make_instance(id, req.instance, req.dimension, req.mode)?
                    }
                    OptimumPlacement::Center => {
                        BenchmarkProblem::with_optimum(id, req.mode, vec![0.0; req.dimension], 0.0)?
                    }
                    OptimumPlacement::Point(x) => {
                        if x.len() != req.dimension {
                            return Err(Error::DimensionMismatch { expected: req.dimension, got: x.len() });
                        }
                        BenchmarkProblem::with_optimum(id, req.mode, x.clone(), 0.0)?
                    }
                };
                Ok(Arc::new(p) as Arc<dyn Objective>)
            });
        }
        reg
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&ProblemRequest) -> Result<Arc<dyn Objective>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, req: &ProblemRequest) -> Result<Arc<dyn Objective>> {
        let factory =
            self.factories.get(&req.function).ok_or_else(|| Error::UnknownFunction(req.function.clone()))?;
        factory(req)
    }
}

impl Default for ProblemRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
