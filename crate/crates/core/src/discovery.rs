//! Intrinsically motivated option discovery and experience collection.
//!
//! Discovery executes random primitives and treats the appearance of a
//! previously unavailable primitive as a surprise: the run of `p` that led to
//! it becomes the option `o(p, t)`. Runs that end because `p` stops being
//! executable become `o(p, {})`.

use std::collections::BTreeSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{PrimSet, Primitive, TileMap};
use crate::options::{
    canonical_option_set, execute_option, initiable_options, OptionDef, TransitionSample,
    DEFAULT_STEP_BUDGET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscoveryConfig {
    pub max_eps: usize,
    /// Micro-steps per episode.
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            max_eps: 200,
            max_steps: 500,
            seed: 7,
        }
    }
}

/// The highest-priority primitive that is available now but was not one
/// micro-step ago, ignoring the exact reverse of `p`.
pub fn new_available_prim(prev_avail: PrimSet, cur_avail: PrimSet, p: Primitive) -> Option<Primitive> {
    let mut fresh = cur_avail.difference(prev_avail);
    if let Some(r) = p.reverse() {
        fresh.remove(r);
    }
    fresh.first()
}

/// A micro-step at which a terminator became available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurpriseEvent {
    pub episode: usize,
    pub p: Primitive,
    pub t: Primitive,
    pub before: PrimSet,
    pub after: PrimSet,
}

#[derive(Debug, Clone, Default)]
pub struct DiscoveryTrace {
    pub options: Vec<OptionDef>,
    pub surprises: Vec<SurpriseEvent>,
    /// Iterations cut short by the episode budget; they produce no option.
    pub truncated: usize,
}

/// Run the discovery loop and return the deduplicated option set with stable ids.
pub fn discover_options(map: &TileMap, cfg: &DiscoveryConfig) -> Vec<OptionDef> {
    discover_options_traced(map, cfg).options
}

pub fn discover_options_traced(map: &TileMap, cfg: &DiscoveryConfig) -> DiscoveryTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut found: BTreeSet<(Primitive, Option<Primitive>)> = BTreeSet::new();
    let mut trace = DiscoveryTrace::default();

    for episode in 0..cfg.max_eps {
        let mut state = map.reset();
        let mut steps = 0;
        while steps < cfg.max_steps {
            let avail = map.available_primitives(&state);
            let choices: Vec<Primitive> = avail.iter().collect();
            let Some(&p) = choices.choose(&mut rng) else {
                break;
            };
            let start = state.clone();
            let mut prev = avail;
            let mut terminator = None;
            let mut truncated = false;
            loop {
                state = map
                    .step_primitive(&state, p, &mut rng)
                    .expect("primitive checked available");
                steps += 1;
                let cur = map.available_primitives(&state);
                if let Some(t) = new_available_prim(prev, cur, p) {
                    trace.surprises.push(SurpriseEvent {
                        episode,
                        p,
                        t,
                        before: prev,
                        after: cur,
                    });
                    terminator = Some(t);
                    break;
                }
                if !cur.contains(p) {
                    break;
                }
                if steps >= cfg.max_steps {
                    truncated = true;
                    break;
                }
                prev = cur;
            }
            if truncated {
                trace.truncated += 1;
                break;
            }
            if state != start {
                found.insert((p, terminator));
            }
        }
    }
    trace.options = canonical_option_set(found);
    trace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    /// Maximum number of option executions.
    pub budget: usize,
    /// Stop early once every option has this many admitted samples.
    pub min_per_option: usize,
    /// Option executions per random-walk episode before resetting.
    pub episode_len: usize,
    pub step_budget: usize,
    pub seed: u64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            budget: 20_000,
            min_per_option: 100,
            episode_len: 400,
            step_budget: DEFAULT_STEP_BUDGET,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Collection {
    pub samples: Vec<TransitionSample>,
    pub executions: usize,
    /// Ids of options left with fewer than `min_per_option` samples.
    pub under_sampled: Vec<usize>,
}

/// Random-walk over initiable options, recording every admitted execution.
pub fn collect_transitions(map: &TileMap, options: &[OptionDef], cfg: &CollectConfig) -> Collection {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut counts = vec![0usize; options.iter().map(|o| o.id + 1).max().unwrap_or(0)];
    let mut samples = Vec::new();
    let mut executions = 0;
    let satisfied = |counts: &[usize]| options.iter().all(|o| counts[o.id] >= cfg.min_per_option);

    'outer: while executions < cfg.budget && !options.is_empty() && !satisfied(&counts) {
        let mut state = map.reset();
        for _ in 0..cfg.episode_len.max(1) {
            if executions >= cfg.budget || satisfied(&counts) {
                break 'outer;
            }
            let initiable = initiable_options(map, &state, options);
            let Some(&id) = initiable.choose(&mut rng) else {
                break;
            };
            let opt = options.iter().find(|o| o.id == id).expect("id from option set");
            let seed: u64 = rng.gen();
            let (next, mut sample) =
                execute_option(map, &state, opt, seed, cfg.step_budget).expect("option initiable");
            executions += 1;
            if sample.admitted() {
                sample.initiable = initiable;
                counts[id] += 1;
                samples.push(sample);
            }
            state = next;
        }
    }

    let under_sampled: Vec<usize> = options
        .iter()
        .filter(|o| counts[o.id] < cfg.min_per_option)
        .map(|o| o.id)
        .collect();
    if !under_sampled.is_empty() && !options.is_empty() {
        let names: Vec<String> = under_sampled
            .iter()
            .map(|&id| format!("{} ({} samples)", options[id], counts[id]))
            .collect();
        warn!("under-sampled options: {}", names.join(", "));
    }
    Collection {
        samples,
        executions,
        under_sampled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{load_map, reference_map};
    use Primitive::*;

    fn set(ps: &[Primitive]) -> PrimSet {
        ps.iter().copied().collect()
    }

    #[test]
    fn ladder_over_agent_is_a_surprise() {
        assert_eq!(
            new_available_prim(set(&[GoLeft, GoRight]), set(&[GoLeft, GoRight, GoUp]), GoRight),
            Some(GoUp)
        );
    }

    #[test]
    fn reverse_primitive_is_not_interesting() {
        assert_eq!(new_available_prim(set(&[GoLeft]), set(&[GoLeft, GoRight]), GoLeft), None);
    }

    #[test]
    fn priority_breaks_ties() {
        assert_eq!(
            new_available_prim(set(&[GoRight]), set(&[GoRight, GoUp, Interact]), GoRight),
            Some(GoUp)
        );
    }

    /// Brute force over every (prev, cur, p) triple against a direct reading of the rule.
    #[test]
    fn exhaustive_against_definition() {
        for prev_bits in 0u8..32 {
            for cur_bits in 0u8..32 {
                let prev: PrimSet = Primitive::ALL
                    .into_iter()
                    .filter(|p| prev_bits & (1 << *p as u8) != 0)
                    .collect();
                let cur: PrimSet = Primitive::ALL
                    .into_iter()
                    .filter(|p| cur_bits & (1 << *p as u8) != 0)
                    .collect();
                for p in prev.iter() {
                    let expected = [GoUp, GoDown, GoLeft, GoRight, Interact]
                        .into_iter()
                        .find(|&t| cur.contains(t) && !prev.contains(t) && Some(t) != p.reverse());
                    assert_eq!(new_available_prim(prev, cur, p), expected);
                }
            }
        }
    }

    #[test]
    fn zero_episodes_find_nothing() {
        let cfg = DiscoveryConfig {
            max_eps: 0,
            ..DiscoveryConfig::default()
        };
        assert!(discover_options(&reference_map(), &cfg).is_empty());
    }

    fn corridor() -> TileMap {
        load_map("[grid]\nWWWWWWWWWWWW\nW....S.....W\nWWWWWWWWWWWW\n").unwrap()
    }

    #[test]
    fn corridor_yields_two_options() {
        let opts = discover_options(&corridor(), &DiscoveryConfig::default());
        let keys: Vec<_> = opts.iter().map(|o| o.key()).collect();
        assert_eq!(keys, vec![(GoLeft, None), (GoRight, None)]);
    }

    #[test]
    fn corridor_collection_covers_its_options() {
        let map = corridor();
        let opts = discover_options(&map, &DiscoveryConfig::default());
        let cfg = CollectConfig {
            budget: 500,
            min_per_option: 20,
            ..CollectConfig::default()
        };
        let c = collect_transitions(&map, &opts, &cfg);
        assert!(c.under_sampled.is_empty());
        assert!(c.samples.iter().all(|s| s.option_id < 2 && s.admitted()));
    }

    #[test]
    fn zero_budget_collects_nothing() {
        let map = reference_map();
        let opts = discover_options(&map, &DiscoveryConfig::default());
        let cfg = CollectConfig {
            budget: 0,
            ..CollectConfig::default()
        };
        let c = collect_transitions(&map, &opts, &cfg);
        assert!(c.samples.is_empty());
        assert_eq!(c.executions, 0);
    }
}
