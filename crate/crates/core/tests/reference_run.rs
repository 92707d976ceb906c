//! End-to-end checks on the reference map. The parameters mirror
//! `configs/reference.toml` in the cli crate.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2p_core::abstraction::partition::compute_mask;
use s2p_core::abstraction::{abstract_dataset, Abstraction, AbstractionConfig, GoalSpec};
use s2p_core::discovery::{collect_transitions, discover_options, CollectConfig, DiscoveryConfig};
use s2p_core::env::{reference_map, Primitive, TileMap};
use s2p_core::exec::{
    bind_actions, execute_symbolic_plan, plan_milestones, trace_milestones, ActionBinding, ExecConfig, Milestone,
};
use s2p_core::options::{OptionDef, TransitionSample};
use s2p_core::planner::{extract_linear_plan, solve_problem, PlannerConfig};
use s2p_core::ppddl::{emit_domain, emit_problem, parse_domain, parse_problem, validate, Severity};

struct Run {
    map: TileMap,
    names: Vec<String>,
    options: Vec<OptionDef>,
    samples: Vec<TransitionSample>,
    abstraction: Abstraction,
    plan: Vec<String>,
    binding: HashMap<String, ActionBinding>,
}

fn abstraction_config() -> AbstractionConfig {
    AbstractionConfig {
        eps: 0.03,
        max_conj: 4,
        ..AbstractionConfig::default()
    }
}

fn run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let map = reference_map();
        let names = map.variable_names();
        let options = discover_options(&map, &DiscoveryConfig::default());
        let collect = CollectConfig {
            budget: 200_000,
            min_per_option: 10_000,
            episode_len: 2_000,
            ..CollectConfig::default()
        };
        let samples = collect_transitions(&map, &options, &collect).samples;
        let start = map.state_vector(&map.reset()).0;
        let goal: Vec<GoalSpec> = ["treasure_held=1", "agent_y=start"].iter().map(|g| g.parse().unwrap()).collect();
        let abstraction = abstract_dataset(&names, &samples, &options, &start, &goal, &abstraction_config()).unwrap();
        let (task, policy) = solve_problem(&abstraction.domain, &abstraction.problem, &PlannerConfig::default()).unwrap();
        let plan = extract_linear_plan(&task, &policy, &mut ChaCha8Rng::seed_from_u64(0), 10_000).unwrap();
        let binding = bind_actions(&abstraction.domain, &options, &abstraction.partitions).unwrap();
        Run {
            map,
            names,
            options,
            samples,
            abstraction,
            plan,
            binding,
        }
    })
}

fn option_id(r: &Run, p: Primitive, t: Option<Primitive>) -> usize {
    r.options.iter().find(|o| o.key() == (p, t)).unwrap().id
}

#[test]
fn factors_partition_the_state_vector() {
    let r = run();
    let mut seen = vec![0; r.names.len()];
    for f in &r.abstraction.factors {
        for &v in &f.vars {
            seen[v] += 1;
        }
    }
    assert!(seen.iter().all(|&c| c == 1));
    let factor_of = |n: &str| {
        let v = r.names.iter().position(|x| x == n).unwrap();
        r.abstraction.factors.iter().position(|f| f.vars.contains(&v)).unwrap()
    };
    let position = [factor_of("agent_x"), factor_of("agent_y")];
    for flag in ["key_held", "bolt_locked", "treasure_held", "handle_1", "handle_2"] {
        assert!(!position.contains(&factor_of(flag)), "{flag} shares a factor with the agent position");
    }
}

#[test]
fn masks_match_the_replayed_effects() {
    let r = run();
    let x = r.names.iter().position(|n| n == "agent_x").unwrap();
    let left_up = option_id(r, Primitive::GoLeft, Some(Primitive::GoUp));
    let interact = option_id(r, Primitive::Interact, None);
    for p in &r.abstraction.partitions {
        if p.option_id == left_up {
            assert_eq!(p.mask.changed_vars, vec![x]);
        }
        if p.option_id == interact {
            assert_eq!(p.mask.changed_vars.len(), 1);
        }
    }
    let handle = r.names.iter().position(|n| n == "handle_1").unwrap();
    assert!(r
        .abstraction
        .partitions
        .iter()
        .any(|p| p.option_id == interact && p.mask.changed_vars.contains(&handle)));
}

#[test]
fn masks_are_stable_under_half_bootstrap() {
    let r = run();
    let cfg = abstraction_config();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let parts = &r.abstraction.partitions;
    let stable = parts
        .iter()
        .filter(|p| {
            let mut idx = p.samples.clone();
            idx.shuffle(&mut rng);
            idx.truncate(idx.len().div_ceil(2));
            let half: Vec<&TransitionSample> = idx.iter().map(|&i| &r.samples[i]).collect();
            compute_mask(&half, cfg.change_tolerance, cfg.mask_fraction) == p.mask.changed_vars
        })
        .count();
    assert!(stable as f64 >= 0.95 * parts.len() as f64, "{stable}/{}", parts.len());
}

#[test]
fn symbol_distributions_are_normalized() {
    let r = run();
    for s in &r.abstraction.vocabulary.symbols {
        let mass: f64 = s.distribution.grid_masses(32).iter().sum();
        assert!((0.997..=1.003).contains(&mass), "{}: {mass}", s.name);
    }
    // every masked factor has a symbol
    for f in r.abstraction.factors.iter().filter(|f| !f.residual) {
        assert!(r.abstraction.vocabulary.symbols_on(f.id).next().is_some());
    }
}

#[test]
fn classifiers_meet_the_accuracy_floor() {
    let r = run();
    assert!(r.abstraction.mean_classifier_accuracy() >= 0.9);
    let right_up = option_id(r, Primitive::GoRight, Some(Primitive::GoUp));
    for (p, c) in r.abstraction.partitions.iter().zip(&r.abstraction.classifiers) {
        if p.option_id == right_up {
            assert!(c.as_ref().unwrap().heldout_accuracy >= 0.9);
        }
    }
}

#[test]
fn generated_ppddl_is_valid_and_canonical() {
    let r = run();
    let a = &r.abstraction;
    assert!(a.operators.len() >= a.partitions.len() && a.operators.len() <= 5000);
    let errors: Vec<_> = validate(&a.domain, &a.problem)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    assert!(errors.is_empty(), "{errors:?}");
    let text = emit_domain(&a.domain);
    assert_eq!(emit_domain(&parse_domain(&text).unwrap()), text);
    let ptext = emit_problem(&a.problem);
    assert_eq!(emit_problem(&parse_problem(&ptext).unwrap()), ptext);
    for action in &a.domain.actions {
        assert!((action.probability_sum() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn effect_branches_reproduce_outcome_frequencies() {
    let r = run();
    let a = &r.abstraction;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for op in &a.operators {
        let part = &a.partitions[op.partition_index];
        let action = a.domain.action(&op.action).unwrap();
        let n = 1000;
        let mut hits = vec![0usize; action.effect.len()];
        for _ in 0..n {
            let mut u = rng.gen::<f64>();
            let k = action
                .effect
                .iter()
                .position(|b| {
                    u -= b.probability;
                    u < 0.0
                })
                .unwrap_or(action.effect.len() - 1);
            hits[k] += 1;
        }
        let total = part.sample_count() as f64;
        let tv: f64 = part
            .outcomes
            .iter()
            .zip(&hits)
            .map(|(o, &h)| (o.count as f64 / total - h as f64 / n as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.05, "{}: {tv}", op.action);
    }
}

#[test]
fn plan_milestones_follow_the_reference_order() {
    let r = run();
    let m = plan_milestones(&r.plan, &r.binding, &r.names);
    let order: Vec<Milestone> = {
        let mut m = m.clone();
        m.sort_by_key(|&(_, step)| step);
        m.into_iter().map(|(k, _)| k).collect()
    };
    assert_eq!(
        order,
        vec![
            Milestone::HandleToggle,
            Milestone::KeyPickup,
            Milestone::BoltUnlock,
            Milestone::TreasurePickup,
            Milestone::Home
        ]
    );
}

#[test]
fn reference_plan_succeeds_in_the_simulator() {
    let r = run();
    let mut ok = 0;
    for seed in 0..100 {
        let e = execute_symbolic_plan(&r.map, &r.plan, &r.binding, &ExecConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap();
        if e.success {
            ok += 1;
            let [key, bolt, treasure] = trace_milestones(&r.names, &e.trace);
            assert!(key.unwrap() < bolt.unwrap() && bolt.unwrap() < treasure.unwrap());
        }
    }
    assert!(ok >= 95, "{ok}/100");
}

#[test]
fn plan_without_key_pickup_fails_at_the_bolt() {
    let r = run();
    let key = plan_milestones(&r.plan, &r.binding, &r.names)
        .into_iter()
        .find(|(m, _)| *m == Milestone::KeyPickup)
        .unwrap()
        .1;
    let bolt = plan_milestones(&r.plan, &r.binding, &r.names)
        .into_iter()
        .find(|(m, _)| *m == Milestone::BoltUnlock)
        .unwrap()
        .1;
    let mut plan = r.plan.clone();
    plan.remove(key);
    let e = execute_symbolic_plan(&r.map, &plan, &r.binding, &ExecConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert!(!e.success);
    // without the key the approach never stops at the bolt, since interact
    // only becomes available there with the key; execution stops before the unlock
    let last = e.trace.last().unwrap();
    assert!(last.step >= key && last.step < bolt, "stopped at {}", last.step);
    let bolt_var = r.names.iter().position(|n| n == "bolt_locked").unwrap();
    assert_eq!(r.map.state_vector(&e.final_state)[bolt_var], 1.0);
}
