//! Goal-directed probabilistic planning over propositional domains.
//!
//! States are predicate valuations; every action costs one. Probability mass
//! missing from an action's branches is a no-change outcome.

mod lrtdp;
mod rollout;
mod space;
mod vi;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rollout::{extract_linear_plan, simulate_policy};

use crate::ppddl::{Domain, Problem};
use space::Space;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Lrtdp,
    ValueIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub epsilon: f64,
    /// LRTDP trials or value-iteration sweeps.
    pub max_iterations: usize,
    pub algorithm: Algorithm,
    pub dead_end_cost: f64,
    /// Reachable states enumerated up front to find dead ends; above this the
    /// solver runs without that analysis.
    pub max_states: usize,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            epsilon: 1e-4,
            max_iterations: 1_000_000,
            algorithm: Algorithm::Lrtdp,
            dead_end_cost: 1e6,
            max_states: 2_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("no policy reaches the goal")]
    GoalUnreachable,
    #[error("no convergence after {0} iterations")]
    IterationLimit(usize),
    #[error("rollout did not reach the goal within {0} steps")]
    RolloutBudgetExceeded(usize),
    #[error("reachable state space exceeds {0} states")]
    StateLimit(usize),
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),
}

/// A predicate valuation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicState(Vec<u64>);

impl SymbolicState {
    pub fn empty(width: usize) -> Self {
        SymbolicState(vec![0; width.div_ceil(64)])
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        if value {
            self.0[i / 64] |= 1 << (i % 64);
        } else {
            self.0[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Indices of true predicates.
    pub fn ones(&self) -> Vec<usize> {
        (0..self.0.len() * 64).filter(|&i| self.get(i)).collect()
    }

    fn contains_all(&self, other: &SymbolicState) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *b)
    }

    fn disjoint(&self, other: &SymbolicState) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == 0)
    }

    fn apply(&self, add: &SymbolicState, del: &SymbolicState) -> SymbolicState {
        SymbolicState(
            self.0
                .iter()
                .zip(&add.0)
                .zip(&del.0)
                .map(|((s, a), d)| (s & !d) | a)
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct GroundBranch {
    pub probability: f64,
    pub add: SymbolicState,
    pub del: SymbolicState,
}

#[derive(Debug, Clone)]
pub struct GroundAction {
    pub name: String,
    pub pre_pos: SymbolicState,
    pub pre_neg: SymbolicState,
    pub branches: Vec<GroundBranch>,
}

impl GroundAction {
    pub fn applicable(&self, s: &SymbolicState) -> bool {
        s.contains_all(&self.pre_pos) && s.disjoint(&self.pre_neg)
    }

    /// Distinct successors with their probabilities, in branch order; the
    /// no-change remainder comes last.
    pub fn successors(&self, s: &SymbolicState) -> Vec<(f64, SymbolicState)> {
        let mut out: Vec<(f64, SymbolicState)> = Vec::new();
        let mut total = 0.0;
        let mut push = |p: f64, t: SymbolicState| match out.iter_mut().find(|(_, u)| *u == t) {
            Some((q, _)) => *q += p,
            None => out.push((p, t)),
        };
        for b in &self.branches {
            total += b.probability;
            push(b.probability, s.apply(&b.add, &b.del));
        }
        let rest = 1.0 - total;
        if rest > 1e-12 {
            push(rest, s.clone());
        }
        out
    }
}

/// A domain and problem with predicates resolved to bit positions.
#[derive(Debug, Clone)]
pub struct GroundedTask {
    pub predicates: Vec<String>,
    pub actions: Vec<GroundAction>,
    pub init: SymbolicState,
    pub goal_pos: SymbolicState,
    pub goal_neg: SymbolicState,
}

impl GroundedTask {
    pub fn new(domain: &Domain, problem: &Problem) -> Result<Self, PlannerError> {
        let width = domain.predicates.len();
        let index: HashMap<&str, usize> = domain
            .predicates
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        let bit = |name: &str| -> Result<usize, PlannerError> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| PlannerError::UndeclaredPredicate(name.to_string()))
        };
        let split = |lits: &[crate::ppddl::Literal]| -> Result<(SymbolicState, SymbolicState), PlannerError> {
            let mut pos = SymbolicState::empty(width);
            let mut neg = SymbolicState::empty(width);
            for l in lits {
                let i = bit(&l.predicate)?;
                if l.positive {
                    pos.set(i, true);
                } else {
                    neg.set(i, true);
                }
            }
            Ok((pos, neg))
        };
        let mut actions = Vec::new();
        for a in &domain.actions {
            let (pre_pos, pre_neg) = split(&a.precondition)?;
            let branches = a
                .effect
                .iter()
                .map(|b| {
                    let (add, del) = split(&b.literals)?;
                    Ok(GroundBranch {
                        probability: b.probability,
                        add,
                        del,
                    })
                })
                .collect::<Result<_, PlannerError>>()?;
            actions.push(GroundAction {
                name: a.name.clone(),
                pre_pos,
                pre_neg,
                branches,
            });
        }
        let mut init = SymbolicState::empty(width);
        for p in &problem.init {
            init.set(bit(p)?, true);
        }
        let (goal_pos, goal_neg) = split(&problem.goal)?;
        Ok(GroundedTask {
            predicates: domain.predicates.clone(),
            actions,
            init,
            goal_pos,
            goal_neg,
        })
    }

    pub fn is_goal(&self, s: &SymbolicState) -> bool {
        s.contains_all(&self.goal_pos) && s.disjoint(&self.goal_neg)
    }
}

/// Greedy policy over the states it reaches from the initial state.
#[derive(Debug, Clone)]
pub struct Policy {
    /// Action index per state; `None` for goal states and dead ends.
    pub actions: HashMap<SymbolicState, Option<usize>>,
    pub values: HashMap<SymbolicState, f64>,
    pub initial_value: f64,
}

impl Policy {
    pub fn action(&self, s: &SymbolicState) -> Option<usize> {
        self.actions.get(s).copied().flatten()
    }

    pub fn value(&self, s: &SymbolicState) -> Option<f64> {
        self.values.get(s).copied()
    }
}

/// Solve for a policy minimizing expected cost to the goal.
pub fn solve(task: &GroundedTask, cfg: &PlannerConfig) -> Result<Policy, PlannerError> {
    let mut space = Space::new(task, cfg);
    match cfg.algorithm {
        Algorithm::Lrtdp => {
            space.analyze(false)?;
            lrtdp::run(&mut space)?;
        }
        Algorithm::ValueIteration => {
            space.analyze(true)?;
            vi::run(&mut space)?;
        }
    }
    let policy = space.policy();
    if policy.initial_value >= cfg.dead_end_cost {
        return Err(PlannerError::GoalUnreachable);
    }
    Ok(policy)
}

/// Convenience wrapper: ground and solve.
pub fn solve_problem(domain: &Domain, problem: &Problem, cfg: &PlannerConfig) -> Result<(GroundedTask, Policy), PlannerError> {
    let task = GroundedTask::new(domain, problem)?;
    let policy = solve(&task, cfg)?;
    Ok((task, policy))
}
