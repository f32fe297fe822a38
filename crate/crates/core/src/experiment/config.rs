use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bchm::{AdaptiveParams, BchmChoice, DEFAULT_EPSILON};
use crate::benchmarks::{Mode, OptimumPlacement, ProblemRegistry, ProblemRequest};
use crate::engine::{ClassicDEParams, EngineConfig, EngineKind, RunConfig, ShadeParams};
use crate::error::{Error, Result};
use crate::telemetry::ClassifierConfig;

pub const DEFAULT_BUDGET_MULTIPLIER: u64 = 10_000;
pub const DEFAULT_STALL_GENERATIONS: u64 = 1000;

/// Reads a JSON object field by field, collecting one message per bad field.
struct Fields {
    map: Map<String, Value>,
    errors: Vec<String>,
}

impl Fields {
    fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(vec![format!("config is not valid JSON: {e}")]))?;
        let Value::Object(map) = value else {
            return Err(Error::InvalidConfig(vec!["config must be a JSON object".into()]));
        };
        let errors = map
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .map(|k| format!("{k}: unknown field"))
            .collect();
        Ok(Self { map, errors })
    }

    fn optional<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        match self.map.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => match serde_json::from_value(v.clone()) {
                Ok(t) => Some(t),
                Err(e) => {
                    self.errors.push(format!("{key}: {e}"));
                    None
                }
            },
        }
    }

    fn or_default<T: DeserializeOwned + Default>(&mut self, key: &str) -> T {
        self.optional(key).unwrap_or_default()
    }

    fn required<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        if matches!(self.map.get(key), None | Some(Value::Null)) {
            self.errors.push(format!("{key}: missing required field"));
            None
        } else {
            self.optional(key)
        }
    }

    fn finish(mut self, extra: impl IntoIterator<Item = String>) -> Result<()> {
        self.errors.extend(extra);
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(self.errors))
        }
    }
}

/// Settings shared by single runs and sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub classic: ClassicDEParams,
    pub lshade: ShadeParams,
    pub adaptive: AdaptiveParams,
    pub beta_epsilon: f64,
    pub target_error: Option<f64>,
    pub count_infeasible_evals: bool,
    pub classifier: ClassifierConfig,
    pub max_generations: Option<u64>,
    pub stall_generations: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            classic: ClassicDEParams::default(),
            lshade: ShadeParams::default(),
            adaptive: AdaptiveParams::default(),
            beta_epsilon: DEFAULT_EPSILON,
            target_error: None,
            count_infeasible_evals: false,
            classifier: ClassifierConfig::default(),
            max_generations: None,
            stall_generations: DEFAULT_STALL_GENERATIONS,
        }
    }
}

const SETTINGS_FIELDS: [&str; 9] = [
    "classic",
    "lshade",
    "adaptive",
    "beta_epsilon",
    "target_error",
    "count_infeasible_evals",
    "classifier",
    "max_generations",
    "stall_generations",
];

impl RunSettings {
    fn read(f: &mut Fields) -> Self {
        let d = Self::default();
        Self {
            classic: f.or_default("classic"),
            lshade: f.or_default("lshade"),
            adaptive: f.or_default("adaptive"),
            beta_epsilon: f.optional("beta_epsilon").unwrap_or(d.beta_epsilon),
            target_error: f.optional("target_error"),
            count_infeasible_evals: f.or_default("count_infeasible_evals"),
            classifier: f.or_default("classifier"),
            max_generations: f.optional("max_generations"),
            stall_generations: f.optional("stall_generations").unwrap_or(d.stall_generations),
        }
    }

    pub fn engine(&self, kind: EngineKind) -> EngineConfig {
        match kind {
            EngineKind::Classic => EngineConfig::Classic(self.classic),
            EngineKind::Lshade => EngineConfig::Lshade(self.lshade),
        }
    }
}

/// A fully resolved single-run configuration; this is what summaries echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub function: String,
    pub instance: u64,
    pub dimension: usize,
    pub mode: Mode,
    pub placement: OptimumPlacement,
    pub engine: EngineKind,
    pub bchm: BchmChoice,
    pub seed: u64,
    /// Charged evaluations.
    pub budget: u64,
    #[serde(flatten)]
    pub settings: RunSettings,
}

impl RunSpec {
    /// Parse a run config file. Required: `function`, `dimension`, `engine`, `bchm`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut allowed = vec![
            "function",
            "instance",
            "dimension",
            "mode",
            "placement",
            "engine",
            "bchm",
            "seed",
            "budget",
            "budget_multiplier",
        ];
        allowed.extend(SETTINGS_FIELDS);
        let mut f = Fields::parse(text, &allowed)?;
        let function: Option<String> = f.required("function");
        let dimension: Option<usize> = f.required("dimension");
        let engine: Option<EngineKind> = f.required("engine");
        let bchm: Option<BchmChoice> = f.required("bchm");
        let instance: u64 = f.optional("instance").unwrap_or(1);
        let mode: Mode = f.optional("mode").unwrap_or(Mode::Sbox);
        let placement: OptimumPlacement = f.or_default("placement");
        let seed: u64 = f.or_default("seed");
        let budget: Option<u64> = f.optional("budget");
        let multiplier: u64 = f.optional("budget_multiplier").unwrap_or(DEFAULT_BUDGET_MULTIPLIER);
        let settings = RunSettings::read(&mut f);
        let mut extra = Vec::new();
        if budget.is_some() && f.map.contains_key("budget_multiplier") {
            extra.push("budget_multiplier: give either budget or budget_multiplier, not both".into());
        }
        f.finish(extra)?;
        let (function, dimension, engine, bchm) =
            (function.expect("checked"), dimension.expect("checked"), engine.expect("checked"), bchm.expect("checked"));
        let spec = Self {
            budget: budget.unwrap_or(multiplier * dimension as u64),
            function,
            instance,
            dimension,
            mode,
            placement,
            engine,
            bchm,
            seed,
            settings,
        };
        Ok(spec)
    }

    /// Build the problem and the run configuration, checking every field.
    pub fn to_run_config(&self, registry: &ProblemRegistry) -> Result<RunConfig> {
        let problem = registry.build(&ProblemRequest {
            function: self.function.clone(),
            instance: self.instance,
            dimension: self.dimension,
            mode: self.mode,
            placement: self.placement.clone(),
        })?;
        if problem.dimension() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: problem.dimension() });
        }
        let s = &self.settings;
        let mut cfg = RunConfig::new(problem, s.engine(self.engine), self.bchm, self.seed);
        cfg.adaptive = s.adaptive;
        cfg.beta_epsilon = s.beta_epsilon;
        cfg.budget = self.budget;
        cfg.target_error = s.target_error;
        cfg.count_infeasible_evals = s.count_infeasible_evals;
        cfg.classifier = s.classifier;
        cfg.max_generations = s.max_generations;
        cfg.stall_generations = s.stall_generations;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A grid of cells (function x instance x dimension x mode x engine x bchm),
/// each run `runs_per_cell` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub functions: Vec<String>,
    pub instances: Vec<u64>,
    pub dimensions: Vec<usize>,
    pub modes: Vec<Mode>,
    pub engines: Vec<EngineKind>,
    pub bchms: Vec<BchmChoice>,
    pub runs_per_cell: u32,
    /// Budget is `budget_multiplier * dimension` charged evaluations.
    pub budget_multiplier: u64,
    pub base_seed: u64,
    pub output_directory: PathBuf,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    pub parallelism: usize,
    pub placement: OptimumPlacement,
    #[serde(flatten)]
    pub settings: RunSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            functions: crate::benchmarks::FunctionId::ALL.iter().map(|f| f.as_str().to_string()).collect(),
            instances: (1..=5).chain(101..=110).collect(),
            dimensions: vec![10],
            modes: vec![Mode::Sbox],
            engines: EngineKind::ALL.to_vec(),
            bchms: BchmChoice::all_ids().map(|id| id.parse().expect("known id")).collect(),
            runs_per_cell: 5,
            budget_multiplier: DEFAULT_BUDGET_MULTIPLIER,
            base_seed: 0,
            output_directory: PathBuf::from("results"),
            parallelism: 0,
            placement: OptimumPlacement::Instance,
            settings: RunSettings::default(),
        }
    }
}

impl SweepConfig {
    /// Parse a sweep config file; absent fields take their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut allowed = vec![
            "functions",
            "instances",
            "dimensions",
            "modes",
            "engines",
            "bchms",
            "runs_per_cell",
            "budget_multiplier",
            "base_seed",
            "output_directory",
            "parallelism",
            "placement",
        ];
        allowed.extend(SETTINGS_FIELDS);
        let mut f = Fields::parse(text, &allowed)?;
        let d = Self::default();
        let cfg = Self {
            functions: f.optional("functions").unwrap_or(d.functions),
            instances: f.optional("instances").unwrap_or(d.instances),
            dimensions: f.optional("dimensions").unwrap_or(d.dimensions),
            modes: f.optional("modes").unwrap_or(d.modes),
            engines: f.optional("engines").unwrap_or(d.engines),
            bchms: f.optional("bchms").unwrap_or(d.bchms),
            runs_per_cell: f.optional("runs_per_cell").unwrap_or(d.runs_per_cell),
            budget_multiplier: f.optional("budget_multiplier").unwrap_or(d.budget_multiplier),
            base_seed: f.optional("base_seed").unwrap_or(d.base_seed),
            output_directory: f.optional("output_directory").unwrap_or(d.output_directory),
            parallelism: f.optional("parallelism").unwrap_or(d.parallelism),
            placement: f.optional("placement").unwrap_or(d.placement),
            settings: RunSettings::read(&mut f),
        };
        f.finish(cfg.problems())?;
        Ok(cfg)
    }

    pub fn problems(&self) -> Vec<String> {
        let mut v = Vec::new();
        let lists = [
            ("functions", self.functions.is_empty()),
            ("instances", self.instances.is_empty()),
            ("dimensions", self.dimensions.is_empty()),
            ("modes", self.modes.is_empty()),
            ("engines", self.engines.is_empty()),
            ("bchms", self.bchms.is_empty()),
        ];
        for (name, empty) in lists {
            if empty {
                v.push(format!("{name}: must not be empty"));
            }
        }
        if self.runs_per_cell == 0 {
            v.push("runs_per_cell: must be at least 1".into());
        }
        if self.budget_multiplier == 0 {
            v.push("budget_multiplier: must be positive".into());
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
