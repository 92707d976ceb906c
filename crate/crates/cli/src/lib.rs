//! Staged command-line driver: discover, collect, abstract, plan, execute.
//!
//! Every stage reads its inputs from and writes its outputs to one output
//! directory, so a run can be resumed or inspected stage by stage.

pub mod config;
pub mod stages;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use s2p_core::abstraction::AbstractionError;
use s2p_core::planner::PlannerError;
use s2p_core::ppddl::{validate_text, Severity};
use thiserror::Error;

pub use config::Config;
pub use stages::Stage;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("execution success rate {rate:.4} below {threshold}")]
    BelowThreshold { rate: f64, threshold: f64 },
    #[error("{0} PPDDL error(s)")]
    InvalidPpddl(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(..) | CliError::Config(_) | CliError::Data(_) | CliError::InvalidPpddl(_) => 1,
            CliError::Abstraction(AbstractionError::UnreachableGoalSymbols(_)) => 2,
            CliError::Planner(PlannerError::GoalUnreachable) => 2,
            CliError::Planner(PlannerError::UndeclaredPredicate(_)) => 1,
            CliError::Planner(_) => 3,
            CliError::BelowThreshold { .. } => 4,
            CliError::Abstraction(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "s2p", version, about = "Learn a symbolic model of a tile game and plan with it")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rerun stages whose outputs already exist.
    #[arg(long)]
    pub force: bool,
    #[arg(long, env = "S2P_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discover options on the map.
    Discover(RunArgs),
    /// Collect option transitions.
    Collect(RunArgs),
    /// Build the symbolic model and emit PPDDL.
    Abstract(RunArgs),
    /// Solve the generated problem and write a linear plan.
    Plan(RunArgs),
    /// Execute the plan in the simulator.
    Execute(RunArgs),
    /// Run every stage in order.
    Pipeline {
        #[command(flatten)]
        args: RunArgs,
        /// Stop after this stage.
        #[arg(long, value_enum)]
        stage: Option<Stage>,
    },
    /// Check a domain and problem file.
    ValidatePpddl { domain: PathBuf, problem: PathBuf },
}

fn load_config(args: &RunArgs) -> Result<Config, CliError> {
    let cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    Ok(match args.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

/// Run `stages` in order, skipping finished ones unless forced.
pub fn run_stages(args: &RunArgs, stages: &[Stage]) -> Result<(), (Option<Stage>, CliError)> {
    let cfg = load_config(args).map_err(|e| (None, e))?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| (None, CliError::Io(args.out_dir.clone(), e)))?;
    for &stage in stages {
        if !args.force && stage.is_done(&args.out_dir) {
            eprintln!("[{}] outputs present, skipping", stage.name());
            continue;
        }
        eprintln!("[{}]", stage.name());
        stage.run(&cfg, &args.out_dir).map_err(|e| (Some(stage), e))?;
    }
    Ok(())
}

fn validate_files(domain: &PathBuf, problem: &PathBuf) -> Result<(), CliError> {
    let d = std::fs::read_to_string(domain).map_err(|e| CliError::Io(domain.clone(), e))?;
    let p = std::fs::read_to_string(problem).map_err(|e| CliError::Io(problem.clone(), e))?;
    let diags = validate_text(&d, &p);
    for x in &diags {
        println!("{x}");
    }
    let errors = diags.iter().filter(|x| x.severity == Severity::Error).count();
    if errors > 0 {
        return Err(CliError::InvalidPpddl(errors));
    }
    println!("ok");
    Ok(())
}

/// Execute a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Discover(a) => run_stages(a, &[Stage::Discover]),
        Command::Collect(a) => run_stages(a, &[Stage::Collect]),
        Command::Abstract(a) => run_stages(a, &[Stage::Abstract]),
        Command::Plan(a) => run_stages(a, &[Stage::Plan]),
        Command::Execute(a) => run_stages(a, &[Stage::Execute]),
        Command::Pipeline { args, stage } => {
            let last = stage.unwrap_or(Stage::Execute);
            let stages: Vec<Stage> = Stage::ALL.into_iter().filter(|s| *s <= last).collect();
            run_stages(args, &stages)
        }
        Command::ValidatePpddl { domain, problem } => validate_files(domain, problem).map_err(|e| (None, e)),
    };
    match result {
        Ok(()) => 0,
        Err((stage, e)) => {
            match stage {
                Some(s) => eprintln!("s2p: stage {} failed: {e}", s.name()),
                None => eprintln!("s2p: {e}"),
            }
            e.exit_code()
        }
    }
}
