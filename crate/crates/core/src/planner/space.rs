use std::collections::HashMap;

use super::{GroundedTask, PlannerConfig, PlannerError, Policy, SymbolicState};

pub(super) struct Transition {
    pub action: usize,
    /// Successors other than the state itself.
    pub outcomes: Vec<(f64, usize)>,
    pub p_self: f64,
}

/// Interned state graph with value estimates, expanded lazily.
pub(super) struct Space<'a> {
    pub task: &'a GroundedTask,
    pub cfg: &'a PlannerConfig,
    pub states: Vec<SymbolicState>,
    index: HashMap<SymbolicState, usize>,
    trans: Vec<Option<Vec<Transition>>>,
    pub value: Vec<f64>,
    pub solved: Vec<bool>,
    pub goal: Vec<bool>,
}

impl<'a> Space<'a> {
    pub fn new(task: &'a GroundedTask, cfg: &'a PlannerConfig) -> Self {
        let mut space = Space {
            task,
            cfg,
            states: Vec::new(),
            index: HashMap::new(),
            trans: Vec::new(),
            value: Vec::new(),
            solved: Vec::new(),
            goal: Vec::new(),
        };
        space.intern(task.init.clone());
        space
    }

    pub fn intern(&mut self, s: SymbolicState) -> usize {
        if let Some(&i) = self.index.get(&s) {
            return i;
        }
        let i = self.states.len();
        let goal = self.task.is_goal(&s);
        self.index.insert(s.clone(), i);
        self.states.push(s);
        self.trans.push(None);
        self.value.push(0.0);
        self.solved.push(goal);
        self.goal.push(goal);
        i
    }

    pub fn expand(&mut self, i: usize) {
        if self.trans[i].is_some() {
            return;
        }
        let mut out = Vec::new();
        if !self.goal[i] {
            let s = self.states[i].clone();
            for (a, action) in self.task.actions.iter().enumerate() {
                if !action.applicable(&s) {
                    continue;
                }
                let mut outcomes = Vec::new();
                let mut p_self = 0.0;
                for (p, t) in action.successors(&s) {
                    if t == s {
                        p_self += p;
                    } else {
                        outcomes.push((p, self.intern(t)));
                    }
                }
                out.push(Transition {
                    action: a,
                    outcomes,
                    p_self,
                });
            }
        }
        self.trans[i] = Some(out);
    }

    pub fn transitions(&self, i: usize) -> &[Transition] {
        self.trans[i].as_deref().expect("state expanded")
    }

    /// Expected cost of taking `t`, with its self-loop solved in closed form.
    pub fn q(&self, t: &Transition) -> f64 {
        if t.p_self >= 1.0 - 1e-12 {
            return f64::INFINITY;
        }
        let rest: f64 = t.outcomes.iter().map(|&(p, j)| p * self.value[j]).sum();
        (1.0 + rest) / (1.0 - t.p_self)
    }

    /// Best value and transition index of an expanded state.
    pub fn best(&self, i: usize) -> (f64, Option<usize>) {
        if self.goal[i] {
            return (0.0, None);
        }
        let mut best = (self.cfg.dead_end_cost, None);
        for (k, t) in self.transitions(i).iter().enumerate() {
            let q = self.q(t);
            if q < best.0 {
                best = (q, Some(k));
            }
        }
        best
    }

    /// Bellman backup; returns the residual.
    pub fn backup(&mut self, i: usize) -> f64 {
        self.expand(i);
        let (v, _) = self.best(i);
        let r = (v - self.value[i]).abs();
        self.value[i] = v;
        r
    }

    /// Enumerate the states reachable from the initial state and fix every
    /// state that cannot reach the goal at the dead-end cost. Without
    /// `complete`, an oversized space skips the analysis instead of failing.
    pub fn analyze(&mut self, complete: bool) -> Result<(), PlannerError> {
        let mut k = 0;
        while k < self.states.len() {
            if self.states.len() > self.cfg.max_states {
                if complete {
                    return Err(PlannerError::StateLimit(self.cfg.max_states));
                }
                log::warn!("state space above {}; skipping dead-end analysis", self.cfg.max_states);
                return Ok(());
            }
            self.expand(k);
            k += 1;
        }
        let n = self.states.len();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for t in self.transitions(i) {
                for &(_, j) in &t.outcomes {
                    preds[j].push(i);
                }
            }
        }
        let mut alive = self.goal.clone();
        let mut stack: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        while let Some(j) = stack.pop() {
            for &i in &preds[j] {
                if !alive[i] {
                    alive[i] = true;
                    stack.push(i);
                }
            }
        }
        if !alive[0] {
            return Err(PlannerError::GoalUnreachable);
        }
        for i in 0..n {
            if !alive[i] {
                self.value[i] = self.cfg.dead_end_cost;
                self.solved[i] = true;
            }
        }
        Ok(())
    }

    /// Greedy policy on the states reachable from the initial state.
    pub fn policy(&mut self) -> Policy {
        let mut policy = Policy {
            actions: HashMap::new(),
            values: HashMap::new(),
            initial_value: self.value[0],
        };
        let mut seen = vec![false; self.states.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            self.expand(i);
            let (_, best) = self.best(i);
            let dead = self.value[i] >= self.cfg.dead_end_cost;
            let choice = if dead { None } else { best };
            policy.values.insert(self.states[i].clone(), self.value[i]);
            policy
                .actions
                .insert(self.states[i].clone(), choice.map(|k| self.transitions(i)[k].action));
            if let Some(k) = choice {
                let next: Vec<usize> = self.transitions(i)[k].outcomes.iter().map(|&(_, j)| j).collect();
                for j in next {
                    if j >= seen.len() {
                        seen.resize(j + 1, false);
                    }
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        policy
    }
}
