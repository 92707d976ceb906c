use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use s2p_core::abstraction::{abstract_dataset, render_report, PartitionArtifact};
use s2p_core::dataset::{options_to_string, parse_options, parse_transitions, transitions_to_string};
use s2p_core::discovery::{collect_transitions, discover_options};
use s2p_core::exec::{bind_actions, execute_symbolic_plan, trace_to_string};
use s2p_core::options::OptionDef;
use s2p_core::planner::{extract_linear_plan, simulate_policy, solve_problem};
use s2p_core::ppddl::{emit_domain, emit_problem, parse_domain, parse_problem, Domain, Problem};

use crate::config::Config;
use crate::CliError;

pub const OPTIONS_FILE: &str = "options.tsv";
pub const TRANSITIONS_FILE: &str = "transitions.tsv";
pub const PARTITIONS_FILE: &str = "partitions.json";
pub const DOMAIN_FILE: &str = "domain.ppddl";
pub const PROBLEM_FILE: &str = "problem.ppddl";
pub const REPORT_FILE: &str = "abstraction_report.txt";
pub const PLAN_FILE: &str = "plan.txt";
pub const TRACE_FILE: &str = "trace.tsv";
pub const SUMMARY_FILE: &str = "execution_summary.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Stage {
    Discover,
    Collect,
    Abstract,
    Plan,
    Execute,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Discover, Stage::Collect, Stage::Abstract, Stage::Plan, Stage::Execute];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Discover => "discover",
            Stage::Collect => "collect",
            Stage::Abstract => "abstract",
            Stage::Plan => "plan",
            Stage::Execute => "execute",
        }
    }

    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Discover => &[OPTIONS_FILE],
            Stage::Collect => &[TRANSITIONS_FILE],
            Stage::Abstract => &[PARTITIONS_FILE, DOMAIN_FILE, PROBLEM_FILE, REPORT_FILE],
            Stage::Plan => &[PLAN_FILE],
            Stage::Execute => &[TRACE_FILE, SUMMARY_FILE],
        }
    }

    pub fn is_done(self, out: &Path) -> bool {
        self.outputs().iter().all(|f| out.join(f).is_file())
    }

    pub fn run(self, cfg: &Config, out: &Path) -> Result<(), CliError> {
        match self {
            Stage::Discover => discover(cfg, out),
            Stage::Collect => collect(cfg, out),
            Stage::Abstract => abstraction(cfg, out),
            Stage::Plan => plan(cfg, out),
            Stage::Execute => execute(cfg, out),
        }
    }
}

fn read(out: &Path, name: &str) -> Result<String, CliError> {
    let p = out.join(name);
    std::fs::read_to_string(&p).map_err(|e| CliError::Io(p, e))
}

fn write(out: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let p: PathBuf = out.join(name);
    std::fs::write(&p, text).map_err(|e| CliError::Io(p, e))
}

fn data_err(name: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{name}: {e}"))
}

fn load_options(out: &Path) -> Result<Vec<OptionDef>, CliError> {
    parse_options(&read(out, OPTIONS_FILE)?).map_err(|e| data_err(OPTIONS_FILE, e))
}

fn load_ppddl(out: &Path) -> Result<(Domain, Problem), CliError> {
    let d = parse_domain(&read(out, DOMAIN_FILE)?).map_err(|e| data_err(DOMAIN_FILE, e))?;
    let p = parse_problem(&read(out, PROBLEM_FILE)?).map_err(|e| data_err(PROBLEM_FILE, e))?;
    Ok((d, p))
}

fn discover(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let map = cfg.load_map()?;
    let options = discover_options(&map, &cfg.discovery());
    eprintln!("discovered {} options", options.len());
    write(out, OPTIONS_FILE, &options_to_string(&options))
}

fn collect(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let map = cfg.load_map()?;
    let options = load_options(out)?;
    let c = collect_transitions(&map, &options, &cfg.collect());
    eprintln!("{} samples from {} executions", c.samples.len(), c.executions);
    if !c.under_sampled.is_empty() {
        eprintln!("under-sampled options: {:?}", c.under_sampled);
    }
    write(out, TRANSITIONS_FILE, &transitions_to_string(&map.variable_names(), &c.samples))
}

fn abstraction(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let map = cfg.load_map()?;
    let options = load_options(out)?;
    let (names, samples) = parse_transitions(&read(out, TRANSITIONS_FILE)?).map_err(|e| data_err(TRANSITIONS_FILE, e))?;
    if names != map.variable_names() {
        return Err(data_err(TRANSITIONS_FILE, "variables do not match the map"));
    }
    let start = map.state_vector(&map.reset()).0;
    let a = abstract_dataset(&names, &samples, &options, &start, &cfg.goal_specs()?, &cfg.abstraction())?;
    eprintln!(
        "{} partitions, {} symbols, {} operators",
        a.partitions.len(),
        a.vocabulary.symbols.len(),
        a.operators.len()
    );
    let json = serde_json::to_string_pretty(&a.artifact()).expect("artifact serializes");
    write(out, PARTITIONS_FILE, &(json + "\n"))?;
    write(out, DOMAIN_FILE, &emit_domain(&a.domain))?;
    write(out, PROBLEM_FILE, &emit_problem(&a.problem))?;
    write(out, REPORT_FILE, &render_report(&a))
}

/// Plan file: two `#` header lines, then one action per line.
pub fn parse_plan(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

fn plan(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let (domain, problem) = load_ppddl(out)?;
    let (task, policy) = solve_problem(&domain, &problem, &cfg.planner())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plan = extract_linear_plan(&task, &policy, &mut rng, cfg.plan.max_length)?;
    let horizon = 10 * (plan.len() + 10);
    let estimate = simulate_policy(&task, &policy, cfg.plan.rollouts, horizon, &mut rng);
    eprintln!("plan of {} steps, expected cost {:.3}", plan.len(), policy.initial_value);
    let mut text = format!(
        "# expected cost: {:.6}\n# success estimate: {:.4}\n",
        policy.initial_value, estimate
    );
    for a in &plan {
        text.push_str(a);
        text.push('\n');
    }
    write(out, PLAN_FILE, &text)
}

fn execute(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let map = cfg.load_map()?;
    let options = load_options(out)?;
    let (domain, _) = load_ppddl(out)?;
    let artifact: PartitionArtifact =
        serde_json::from_str(&read(out, PARTITIONS_FILE)?).map_err(|e| data_err(PARTITIONS_FILE, e))?;
    let plan = parse_plan(&read(out, PLAN_FILE)?);
    let binding = bind_actions(&domain, &options, &artifact.partitions).map_err(|e| data_err(DOMAIN_FILE, e))?;
    let names = map.variable_names();

    let runs = cfg.execute.runs.max(1);
    let mut successes = 0;
    let mut failures = String::new();
    for i in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
        let e = execute_symbolic_plan(&map, &plan, &binding, &cfg.execute.exec, &mut rng)
            .map_err(|e| data_err(PLAN_FILE, e))?;
        if i == 0 {
            write(out, TRACE_FILE, &trace_to_string(&names, &e.trace))?;
        }
        match e.failure {
            None => successes += 1,
            Some(f) => {
                let _ = writeln!(failures, "run {i}: {f}");
            }
        }
    }
    let rate = successes as f64 / runs as f64;
    let summary = format!("runs\t{runs}\nsuccesses\t{successes}\nsuccess_rate\t{rate:.4}\n{failures}");
    write(out, SUMMARY_FILE, &summary)?;
    eprintln!("{successes}/{runs} executions reached the goal");
    if rate < cfg.execute.success_threshold {
        return Err(CliError::BelowThreshold {
            rate,
            threshold: cfg.execute.success_threshold,
        });
    }
    Ok(())
}
