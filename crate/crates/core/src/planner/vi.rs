//! Gauss-Seidel value iteration over the full reachable space.

use super::space::Space;
use super::PlannerError;

pub(super) fn run(space: &mut Space) -> Result<(), PlannerError> {
    let n = space.states.len();
    let mut sweeps = 0;
    loop {
        let mut residual: f64 = 0.0;
        for i in 0..n {
            if space.solved[i] {
                continue;
            }
            residual = residual.max(space.backup(i));
        }
        if residual < space.cfg.epsilon {
            break;
        }
        sweeps += 1;
        if sweeps >= space.cfg.max_iterations {
            return Err(PlannerError::IterationLimit(space.cfg.max_iterations));
        }
    }
    for s in space.solved.iter_mut() {
        *s = true;
    }
    Ok(())
}
