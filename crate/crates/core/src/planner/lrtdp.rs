//! Labeled real-time dynamic programming with a zero heuristic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::space::Space;
use super::PlannerError;

/// Longest trial before it is cut and labeling starts.
const MAX_TRIAL_DEPTH: usize = 100_000;

pub(super) fn run(space: &mut Space) -> Result<(), PlannerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(space.cfg.seed);
    let mut mark = Vec::new();
    let mut trials = 0;
    while !space.solved[0] {
        trials += 1;
        if trials > space.cfg.max_iterations {
            return Err(PlannerError::IterationLimit(space.cfg.max_iterations));
        }
        trial(space, &mut rng, &mut mark);
    }
    Ok(())
}

fn trial(space: &mut Space, rng: &mut ChaCha8Rng, mark: &mut Vec<u64>) {
    let mut visited = Vec::new();
    let mut s = 0;
    while !space.solved[s] && visited.len() < MAX_TRIAL_DEPTH {
        visited.push(s);
        space.expand(s);
        let (v, best) = space.best(s);
        space.value[s] = v;
        let Some(k) = best else {
            space.solved[s] = true;
            break;
        };
        let t = &space.transitions(s)[k];
        let mut r = rng.gen::<f64>() - t.p_self;
        if r < 0.0 {
            continue;
        }
        let mut next = t.outcomes.last().map(|&(_, j)| j).unwrap_or(s);
        for &(p, j) in &t.outcomes {
            if r < p {
                next = j;
                break;
            }
            r -= p;
        }
        s = next;
    }
    let generation = rng.gen::<u64>() | 1;
    while let Some(s) = visited.pop() {
        if !check_solved(space, s, mark, generation) {
            break;
        }
    }
}

fn check_solved(space: &mut Space, s: usize, mark: &mut Vec<u64>, generation: u64) -> bool {
    let eps = space.cfg.epsilon;
    let mut ok = true;
    let mut open = Vec::new();
    let mut closed = Vec::new();
    let tag = |mark: &mut Vec<u64>, i: usize| -> bool {
        if mark.len() <= i {
            mark.resize(i + 1, 0);
        }
        let fresh = mark[i] != generation;
        mark[i] = generation;
        fresh
    };
    if !space.solved[s] {
        tag(mark, s);
        open.push(s);
    }
    while let Some(x) = open.pop() {
        closed.push(x);
        space.expand(x);
        let (v, best) = space.best(x);
        if (v - space.value[x]).abs() > eps {
            ok = false;
            continue;
        }
        let Some(k) = best else { continue };
        let next: Vec<usize> = space.transitions(x)[k].outcomes.iter().map(|&(_, j)| j).collect();
        for j in next {
            if !space.solved[j] && tag(mark, j) {
                open.push(j);
            }
        }
    }
    if ok {
        for &x in &closed {
            space.solved[x] = true;
        }
    } else {
        while let Some(x) = closed.pop() {
            space.backup(x);
        }
    }
    ok
}
