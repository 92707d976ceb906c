use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GroundedTask, PlannerError, Policy, SymbolicState};

fn sample_successor<R: Rng + ?Sized>(succ: &[(f64, SymbolicState)], rng: &mut R) -> SymbolicState {
    let mut r = rng.gen::<f64>() * succ.iter().map(|(p, _)| p).sum::<f64>();
    for (p, t) in succ {
        if r < *p {
            return t.clone();
        }
        r -= p;
    }
    succ.last().expect("at least one successor").1.clone()
}

/// Follow the policy from the initial state, always taking the most probable
/// successor that changes the state. Once a state repeats, successors are
/// sampled instead. Dead-end successors are never taken.
pub fn extract_linear_plan<R: Rng + ?Sized>(
    task: &GroundedTask,
    policy: &Policy,
    rng: &mut R,
    budget: usize,
) -> Result<Vec<String>, PlannerError> {
    let mut plan = Vec::new();
    let mut s = task.init.clone();
    let mut visited = HashSet::new();
    let mut sampling = false;
    while !task.is_goal(&s) {
        if plan.len() >= budget {
            return Err(PlannerError::RolloutBudgetExceeded(budget));
        }
        let a = policy.action(&s).ok_or(PlannerError::GoalUnreachable)?;
        visited.insert(s.clone());
        let action = &task.actions[a];
        plan.push(action.name.clone());
        let succ: Vec<(f64, SymbolicState)> = action
            .successors(&s)
            .into_iter()
            .filter(|(_, t)| task.is_goal(t) || policy.action(t).is_some())
            .collect();
        if succ.is_empty() {
            return Err(PlannerError::GoalUnreachable);
        }
        let next = if sampling {
            sample_successor(&succ, rng)
        } else {
            let mut best: Option<&(f64, SymbolicState)> = None;
            for o in succ.iter().filter(|(_, t)| *t != s) {
                if best.is_none_or(|b| o.0 > b.0) {
                    best = Some(o);
                }
            }
            let t = best.map(|b| b.1.clone()).unwrap_or_else(|| s.clone());
            if visited.contains(&t) {
                sampling = true;
                sample_successor(&succ, rng)
            } else {
                t
            }
        };
        s = next;
    }
    Ok(plan)
}

/// Fraction of `n` sampled trajectories that reach the goal within `horizon`
/// steps. Each trajectory draws from its own stream.
pub fn simulate_policy<R: Rng + ?Sized>(
    task: &GroundedTask,
    policy: &Policy,
    n: usize,
    horizon: usize,
    rng: &mut R,
) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let base: u64 = rng.gen();
    let hits = (0..n)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(base.wrapping_add(i as u64));
            let mut s = task.init.clone();
            for _ in 0..horizon {
                if task.is_goal(&s) {
                    return true;
                }
                let Some(a) = policy.action(&s) else { return false };
                s = sample_successor(&task.actions[a].successors(&s), &mut rng);
            }
            task.is_goal(&s)
        })
        .count();
    hits as f64 / n as f64
}
