use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bchmlab::analysis::{Aggregation, Metric, DEFAULT_GRID_POINTS};
use bchmlab::engine::EngineKind;
use bchmlab::experiment::{
    classify_report, cluster_report, execute_run, rank_report, run_sweep, ClusterOptions, GroupBy, Manifest, RunSpec,
    Selection, SweepConfig,
};
use bchmlab::{BchmChoice, Error, Execution, ProblemRegistry};
use clap::{Args, Parser, Subcommand};

/// Differential evolution experiments with bound constraint handling.
#[derive(Parser)]
#[command(name = "bchmlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration; writes trajectory.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Charge infeasible evaluations against the budget.
        #[arg(long)]
        count_infeasible_evals: bool,
    },
    /// Run every cell of a sweep config; resumes where a previous sweep stopped.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_directory`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads, 0 = all cores. Overrides `parallelism`.
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        count_infeasible_evals: bool,
    },
    /// Per-cell behaviour class table (classes.csv).
    Classify {
        #[command(flatten)]
        input: ReportInput,
    },
    /// Similarity matrices and dendrograms per metric.
    Cluster {
        #[command(flatten)]
        input: ReportInput,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
        /// Label rows by `method` or `function`.
        #[arg(long, default_value = "method")]
        by: GroupBy,
        /// `average` or `concatenate`.
        #[arg(long, default_value = "average")]
        aggregation: Aggregation,
        /// Repeatable; all three metrics when absent.
        #[arg(long = "metric")]
        metrics: Vec<Metric>,
    },
    /// Mean-rank table of the methods (ranking.csv).
    Rank {
        #[command(flatten)]
        input: ReportInput,
    },
    /// Print the built-in functions and the method ids.
    List,
}

#[derive(Args)]
struct ReportInput {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to the manifest's directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only use runs of this engine.
    #[arg(long)]
    engine: Option<EngineKind>,
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
}

impl ReportInput {
    fn open(&self) -> Result<(Manifest, PathBuf, Selection, Execution), Error> {
        let m = Manifest::load(&self.manifest)?;
        let out = self.out.clone().unwrap_or_else(|| m.root.clone());
        Ok((m, out, Selection { engine: self.engine }, Execution::with_workers(self.parallelism)))
    }
}

fn read_config(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(vec![format!("cannot read config {}: {e}", path.display())]))
}

fn execute(cmd: Command) -> Result<String, Error> {
    let registry = ProblemRegistry::with_builtins();
    let mut text = String::new();
    match cmd {
        Command::Run { config, out, count_infeasible_evals } => {
            let mut spec = RunSpec::from_json(&read_config(&config)?)?;
            spec.settings.count_infeasible_evals |= count_infeasible_evals;
            let (csv, json) = (out.join("trajectory.csv"), out.join("summary.json"));
            let s = execute_run(&spec, &registry, &csv, &json)?;
            text += &format!("{} {} error {:e}\n", s.problem, s.final_class.code(), s.final_error);
            text += &format!("{}\n", csv.display());
            text += &format!("{}\n", json.display());
        }
        Command::Sweep { config, out, parallelism, count_infeasible_evals } => {
            let mut cfg = SweepConfig::from_json(&read_config(&config)?)?;
            if let Some(o) = out {
                cfg.output_directory = o;
            }
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            cfg.settings.count_infeasible_evals |= count_infeasible_evals;
            let r = run_sweep(&cfg, &registry)?;
            text += &format!("{} runs: {} executed, {} already present\n", r.total_runs, r.executed, r.skipped);
            text += &format!("{}\n", r.manifest.display());
        }
        Command::Classify { input } => {
            let (m, out, sel, exec) = input.open()?;
            text += &format!("{}\n", classify_report(&m, &sel, &out, exec)?.display());
        }
        Command::Cluster { input, grid_points, by, aggregation, metrics } => {
            let (m, out, selection, exec) = input.open()?;
            let metrics = if metrics.is_empty() { Metric::ALL.to_vec() } else { metrics };
            let opts = ClusterOptions { by, metrics, grid_points, aggregation, selection };
            for p in cluster_report(&m, &opts, &out, exec)? {
                text += &format!("{}\n", p.display());
            }
        }
        Command::Rank { input } => {
            let (m, out, sel, exec) = input.open()?;
            text += &format!("{}\n", rank_report(&m, &sel, &out, exec)?.display());
        }
        Command::List => {
            text += "functions:\n";
            for f in registry.names() {
                text += &format!("  {f}\n");
            }
            text += "methods:\n";
            for id in BchmChoice::all_ids() {
                text += &format!("  {id}\n");
            }
            text += "engines:\n";
            for e in EngineKind::ALL {
                text += &format!("  {}\n", e.as_str());
            }
        }
    }
    Ok(text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(text) => {
            // a closed pipe (e.g. `| head`) is not an error
            let _ = io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(Error::InvalidConfig(msgs)) => {
            eprintln!("invalid configuration:");
            for m in msgs {
                eprintln!("  {m}");
            }
            ExitCode::from(2)
        }
        Err(e) if e.is_config_error() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Error::MissingArtifacts(paths)) => {
            eprintln!("missing trajectories:");
            for p in paths {
                eprintln!("  {}", p.display());
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
