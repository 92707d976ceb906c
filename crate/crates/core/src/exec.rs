//! Running symbolic plans back in the simulator.

use std::collections::HashMap;
use std::fmt::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{parse_action_name, PartitionedOption};
use crate::env::{TileMap, WorldState};
use crate::options::{can_initiate, execute_option, OptionDef, DEFAULT_STEP_BUDGET};
use crate::ppddl::Domain;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("action `{0}` does not name a known option partition")]
    UnknownActionName(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionBinding {
    pub option: OptionDef,
    pub partition: PartitionedOption,
}

/// Map every domain action to the option and partition its name encodes.
pub fn bind_actions(
    domain: &Domain,
    options: &[OptionDef],
    partitions: &[PartitionedOption],
) -> Result<HashMap<String, ActionBinding>, ExecError> {
    let mut out = HashMap::new();
    for a in &domain.actions {
        let unknown = || ExecError::UnknownActionName(a.name.clone());
        let (o, p, _) = parse_action_name(&a.name).ok_or_else(unknown)?;
        let option = *options.iter().find(|x| x.id == o).ok_or_else(unknown)?;
        let partition = partitions
            .iter()
            .find(|x| x.option_id == o && x.partition_id == p)
            .ok_or_else(unknown)?
            .clone();
        out.insert(a.name.clone(), ActionBinding { option, partition });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecConfig {
    /// Extra attempts per step after a mismatching outcome.
    pub retry_budget: usize,
    pub change_tolerance: f64,
    /// L∞ distance allowed between an observed and a recorded terminal value.
    pub match_radius: f64,
    pub step_budget: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            retry_budget: 3,
            change_tolerance: 0.01,
            match_radius: 0.05,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub attempt: usize,
    pub action: String,
    pub option: OptionDef,
    /// Termination reason, or `not-initiable`.
    pub reason: String,
    pub micro_steps: usize,
    pub matched: bool,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub success: bool,
    /// Why execution stopped early, if it did.
    pub failure: Option<String>,
    pub trace: Vec<TraceRow>,
    pub final_state: WorldState,
}

/// Treasure held and the agent within one tile of home.
pub fn goal_reached(map: &TileMap, s: &WorldState) -> bool {
    let (hx, hy) = map.home_px();
    let t = map.tile_size();
    s.treasure_held && (s.agent_x - hx).abs() <= t && (s.agent_y - hy).abs() <= t
}

/// Execute a bound plan from the reset state. A step whose outcome matches no
/// outcome of its partition is retried from where the agent ended up, at
/// most `retry_budget` times.
pub fn execute_symbolic_plan<R: Rng + ?Sized>(
    map: &TileMap,
    plan: &[String],
    binding: &HashMap<String, ActionBinding>,
    cfg: &ExecConfig,
    rng: &mut R,
) -> Result<Execution, ExecError> {
    let mut state = map.reset();
    let mut trace = Vec::new();
    let mut failure = None;
    'plan: for (step, name) in plan.iter().enumerate() {
        let b = binding
            .get(name)
            .ok_or_else(|| ExecError::UnknownActionName(name.clone()))?;
        for attempt in 0..=cfg.retry_budget {
            if !can_initiate(map, &state, &b.option) {
                trace.push(TraceRow {
                    step,
                    attempt,
                    action: name.clone(),
                    option: b.option,
                    reason: "not-initiable".to_string(),
                    micro_steps: 0,
                    matched: false,
                    state: map.state_vector(&state).0,
                });
                failure = Some(format!("step {step} ({name}): option {} not initiable", b.option));
                break 'plan;
            }
            let (next, sample) = execute_option(map, &state, &b.option, rng.gen(), cfg.step_budget)
                .expect("initiation checked");
            let matched = b
                .partition
                .matches(sample.s_init.as_slice(), sample.s_term.as_slice(), cfg.change_tolerance, cfg.match_radius)
                .is_some();
            trace.push(TraceRow {
                step,
                attempt,
                action: name.clone(),
                option: b.option,
                reason: sample.reason.as_str().to_string(),
                micro_steps: sample.steps,
                matched,
                state: sample.s_term.0.clone(),
            });
            state = next;
            if matched {
                continue 'plan;
            }
        }
        failure = Some(format!("step {step} ({name}): outcome mismatch after {} retries", cfg.retry_budget));
        break;
    }
    let success = goal_reached(map, &state);
    if !success && failure.is_none() {
        failure = Some("plan finished without reaching the goal".to_string());
    }
    Ok(Execution {
        success,
        failure,
        trace,
        final_state: state,
    })
}

/// Tab-separated trace with a header row.
pub fn trace_to_string(names: &[String], trace: &[TraceRow]) -> String {
    let mut out = String::from("step\tattempt\taction\toption\treason\tmicro_steps\tmatched");
    for n in names {
        let _ = write!(out, "\t{n}");
    }
    out.push('\n');
    for r in trace {
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.step, r.attempt, r.action, r.option, r.reason, r.micro_steps, r.matched
        );
        for v in &r.state {
            let _ = write!(out, "\t{}", crate::dataset::format_sig9(*v));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Milestone {
    HandleToggle,
    KeyPickup,
    BoltUnlock,
    TreasurePickup,
    Home,
}

/// First plan step achieving each milestone, judged from the bound
/// partitions' effects. `Home` is the final step of a plan that picks up the
/// treasure.
pub fn plan_milestones(
    plan: &[String],
    binding: &HashMap<String, ActionBinding>,
    names: &[String],
) -> Vec<(Milestone, usize)> {
    let var = |n: &str| names.iter().position(|x| x == n);
    let mut found: Vec<(Milestone, usize)> = Vec::new();
    let note = |m: Milestone, i: usize, found: &mut Vec<(Milestone, usize)>| {
        if !found.iter().any(|(x, _)| *x == m) {
            found.push((m, i));
        }
    };
    for (i, name) in plan.iter().enumerate() {
        let Some(b) = binding.get(name) else { continue };
        for o in &b.partition.outcomes {
            for (k, &v) in o.mask.iter().enumerate() {
                let terminal = o.terminals.first().map(|(t, _)| t[k]);
                let n = names[v].as_str();
                if n.starts_with("handle_") {
                    note(Milestone::HandleToggle, i, &mut found);
                } else if Some(v) == var("key_held") && terminal == Some(1.0) {
                    note(Milestone::KeyPickup, i, &mut found);
                } else if Some(v) == var("bolt_locked") && terminal == Some(0.0) {
                    note(Milestone::BoltUnlock, i, &mut found);
                } else if Some(v) == var("treasure_held") && terminal == Some(1.0) {
                    note(Milestone::TreasurePickup, i, &mut found);
                }
            }
        }
    }
    if !plan.is_empty() && found.iter().any(|(m, _)| *m == Milestone::TreasurePickup) {
        note(Milestone::Home, plan.len() - 1, &mut found);
    }
    found
}

/// First trace rows where key_held, ¬bolt_locked and treasure_held hold.
pub fn trace_milestones(names: &[String], trace: &[TraceRow]) -> [Option<usize>; 3] {
    let idx = |n: &str| names.iter().position(|x| x == n);
    let checks = [(idx("key_held"), 1.0), (idx("bolt_locked"), 0.0), (idx("treasure_held"), 1.0)];
    checks.map(|(v, want)| v.and_then(|v| trace.iter().position(|r| r.state[v] == want)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::reference_map;
    use crate::ppddl::{Action, Branch, Literal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_plan_does_not_reach_the_goal() {
        let map = reference_map();
        let e = execute_symbolic_plan(&map, &[], &HashMap::new(), &ExecConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert!(!e.success);
        assert!(e.trace.is_empty());
    }

    #[test]
    fn foreign_action_names_do_not_bind() {
        let mut d = Domain::new("d");
        d.predicates = vec!["p".into()];
        d.actions.push(Action {
            name: "jump".into(),
            precondition: vec![],
            effect: vec![Branch {
                probability: 1.0,
                literals: vec![Literal::pos("p")],
            }],
        });
        assert_eq!(
            bind_actions(&d, &[], &[]).unwrap_err(),
            ExecError::UnknownActionName("jump".into())
        );
    }

    #[test]
    fn home_tolerance_is_one_tile() {
        let map = reference_map();
        let mut s = map.reset();
        assert!(!goal_reached(&map, &s));
        s.treasure_held = true;
        assert!(goal_reached(&map, &s));
        s.agent_x += map.tile_size();
        assert!(goal_reached(&map, &s));
        s.agent_x += 1;
        assert!(!goal_reached(&map, &s));
    }
}
