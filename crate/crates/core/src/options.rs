//! Options `o(p, t)`: run primitive `p` until primitive `t` becomes available
//! or `p` can no longer be executed.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Primitive, StateVector, TileMap, WorldState};

/// Micro-step cap applied by [`execute_option`] callers unless configured otherwise.
pub const DEFAULT_STEP_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OptionDef {
    pub id: usize,
    /// Primitive executed by the policy.
    pub p: Primitive,
    /// Primitive whose availability terminates the option; `None` is `{}`.
    pub t: Option<Primitive>,
}

impl OptionDef {
    pub fn new(id: usize, p: Primitive, t: Option<Primitive>) -> Self {
        debug_assert!(t != Some(p) && (t.is_none() || t != p.reverse()));
        OptionDef { id, p, t }
    }

    pub fn key(&self) -> (Primitive, Option<Primitive>) {
        (self.p, self.t)
    }
}

impl fmt::Display for OptionDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.t {
            Some(t) => write!(f, "({}, {})", self.p, t),
            None => write!(f, "({}, {{}})", self.p),
        }
    }
}

/// Assign stable ids to a set of `(p, t)` pairs: sorted by `p` then `t`, with
/// `{}` before any terminator.
pub fn canonical_option_set(pairs: impl IntoIterator<Item = (Primitive, Option<Primitive>)>) -> Vec<OptionDef> {
    let mut keys: Vec<_> = pairs.into_iter().collect();
    keys.sort_by_key(|&(p, t)| (p, t.map(|t| t as u8 + 1).unwrap_or(0)));
    keys.dedup();
    keys.into_iter()
        .enumerate()
        .map(|(id, (p, t))| OptionDef::new(id, p, t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationReason {
    TerminatorAvailable,
    PrimitiveExhausted,
    StepBudget,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::TerminatorAvailable => "terminator_available",
            TerminationReason::PrimitiveExhausted => "primitive_exhausted",
            TerminationReason::StepBudget => "step_budget",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "terminator_available" => Some(TerminationReason::TerminatorAvailable),
            "primitive_exhausted" => Some(TerminationReason::PrimitiveExhausted),
            "step_budget" => Some(TerminationReason::StepBudget),
            _ => None,
        }
    }
}

/// One option execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSample {
    pub option_id: usize,
    pub s_init: StateVector,
    pub s_term: StateVector,
    pub reason: TerminationReason,
    pub steps: usize,
    pub seed: u64,
    /// Ids of every option whose initiation set contained the start state.
    /// Empty when the executor did not know the option set.
    pub initiable: Vec<usize>,
}

impl TransitionSample {
    /// Whether the sample may enter the abstraction dataset.
    pub fn admitted(&self) -> bool {
        self.reason != TerminationReason::StepBudget && self.s_init != self.s_term
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OptionError {
    #[error("option {0} cannot be initiated in this state")]
    NotInitiable(OptionDef),
}

/// Initiation set membership: `p` runs and `t` is not already available.
pub fn can_initiate(map: &TileMap, state: &WorldState, opt: &OptionDef) -> bool {
    map.is_available(state, opt.p) && opt.t.is_none_or(|t| !map.is_available(state, t))
}

/// Ids of the options that can start in `state`.
pub fn initiable_options(map: &TileMap, state: &WorldState, options: &[OptionDef]) -> Vec<usize> {
    options
        .iter()
        .filter(|o| can_initiate(map, state, o))
        .map(|o| o.id)
        .collect()
}

/// Run `opt` from `state`, drawing primitive noise from a stream seeded with `seed`.
pub fn execute_option(
    map: &TileMap,
    state: &WorldState,
    opt: &OptionDef,
    seed: u64,
    step_budget: usize,
) -> Result<(WorldState, TransitionSample), OptionError> {
    if !can_initiate(map, state, opt) {
        return Err(OptionError::NotInitiable(*opt));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = state.clone();
    let mut steps = 0;
    let reason = loop {
        current = map
            .step_primitive(&current, opt.p, &mut rng)
            .expect("policy primitive checked available");
        steps += 1;
        if opt.t.is_some_and(|t| map.is_available(&current, t)) {
            break TerminationReason::TerminatorAvailable;
        }
        if !map.is_available(&current, opt.p) {
            break TerminationReason::PrimitiveExhausted;
        }
        if steps >= step_budget {
            break TerminationReason::StepBudget;
        }
    };
    let sample = TransitionSample {
        option_id: opt.id,
        s_init: map.state_vector(state),
        s_term: map.state_vector(&current),
        reason,
        steps,
        seed,
        initiable: Vec::new(),
    };
    Ok((current, sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{load_map, reference_map};
    use Primitive::*;

    fn opt(p: Primitive, t: Option<Primitive>) -> OptionDef {
        OptionDef::new(0, p, t)
    }

    fn floor(map: &TileMap, row: i32, x: i32) -> WorldState {
        let mut s = map.reset();
        s.agent_x = x;
        s.agent_y = row * map.tile_size();
        s
    }

    #[test]
    fn initiation_excludes_immediate_termination() {
        let map = reference_map();
        // floor 5, aligned under the home ladder: go_up is available
        let s = floor(&map, 3, 80);
        assert!(map.is_available(&s, GoUp));
        assert!(!can_initiate(&map, &s, &opt(GoRight, Some(GoUp))));
        assert!(can_initiate(&map, &s, &opt(GoLeft, None)));
    }

    #[test]
    fn blocked_primitive_cannot_initiate() {
        let map = load_map("[grid]\nWWWWWW\nWS...W\nWWWWWW\n").unwrap();
        let s = map.reset();
        assert!(!can_initiate(&map, &s, &opt(GoLeft, None)));
        assert!(!can_initiate(&map, &s, &opt(GoUp, None)));
        assert_eq!(
            execute_option(&map, &s, &opt(GoLeft, None), 0, 100).unwrap_err(),
            OptionError::NotInitiable(opt(GoLeft, None))
        );
    }

    #[test]
    fn go_right_until_ladder() {
        let map = reference_map();
        // floor 5, left wall; the home ladder is to the right
        let s = floor(&map, 3, 16);
        let o = opt(GoRight, Some(GoUp));
        let (end, sample) = execute_option(&map, &s, &o, 11, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(sample.reason, TerminationReason::TerminatorAvailable);
        assert!(map.is_available(&end, GoUp));
        // the band is entered from the left: centre within [88 - 4, 88 - 1]
        let cx = end.agent_x + 8;
        assert!((84..=87).contains(&cx), "cx = {cx}");
    }

    #[test]
    fn go_left_until_wall() {
        let map = load_map("[grid]\nWWWWWWWWW\nW......SW\nWWWWWWWWW\n").unwrap();
        let s = map.reset();
        let (end, sample) = execute_option(&map, &s, &opt(GoLeft, None), 5, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(sample.reason, TerminationReason::PrimitiveExhausted);
        assert_eq!(end.agent_x, 16);
        assert!(sample.steps >= (s.agent_x - 16) as usize / 4);
        assert!(sample.admitted());
    }

    #[test]
    fn go_up_from_mid_ladder_to_top() {
        let map = reference_map();
        let mut s = map.reset();
        s.agent_y = 16 + 9;
        let (end, sample) = execute_option(&map, &s, &opt(GoUp, None), 2, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(sample.reason, TerminationReason::PrimitiveExhausted);
        assert_eq!(end.agent_y, 16);
        assert_eq!(end.agent_x, s.agent_x);
    }

    #[test]
    fn step_budget_truncates() {
        let map = reference_map();
        let s = floor(&map, 3, 16);
        let (_, sample) = execute_option(&map, &s, &opt(GoRight, None), 1, 3).unwrap();
        assert_eq!(sample.reason, TerminationReason::StepBudget);
        assert_eq!(sample.steps, 3);
        assert!(!sample.admitted());
    }

    #[test]
    fn replay_is_identical() {
        let map = reference_map();
        let s = floor(&map, 3, 16);
        let o = opt(GoRight, None);
        let a = execute_option(&map, &s, &o, 99, DEFAULT_STEP_BUDGET).unwrap();
        let b = execute_option(&map, &s, &o, 99, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_ids_follow_priority() {
        let set = canonical_option_set([
            (Interact, None),
            (GoRight, Some(GoUp)),
            (GoLeft, None),
            (GoRight, None),
            (GoLeft, None),
        ]);
        let shown: Vec<_> = set.iter().map(|o| (o.id, o.to_string())).collect();
        assert_eq!(
            shown,
            vec![
                (0, "(go_left, {})".to_string()),
                (1, "(go_right, {})".to_string()),
                (2, "(go_right, go_up)".to_string()),
                (3, "(interact, {})".to_string()),
            ]
        );
    }
}
