use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2p_core::planner::{
    extract_linear_plan, simulate_policy, solve, Algorithm, GroundedTask, PlannerConfig, PlannerError,
};
use s2p_core::ppddl::{Action, Branch, Domain, Literal, Problem};

fn random_literals(rng: &mut ChaCha8Rng, n_pred: usize, max: usize) -> Vec<Literal> {
    let k = rng.gen_range(0..=max);
    let mut out: Vec<Literal> = Vec::new();
    for _ in 0..k {
        let i = rng.gen_range(0..n_pred);
        if out.iter().any(|l| l.predicate == format!("p{i}")) {
            continue;
        }
        let name = format!("p{i}");
        out.push(if rng.gen_bool(0.7) { Literal::pos(name) } else { Literal::neg(name) });
    }
    out
}

/// Random propositional domain with at most 2^n_pred states.
fn random_task(rng: &mut ChaCha8Rng) -> (Domain, Problem) {
    let n_pred = rng.gen_range(3..=12);
    let mut d = Domain::new("random");
    d.predicates = (0..n_pred).map(|i| format!("p{i}")).collect();
    for a in 0..rng.gen_range(3..=14) {
        let n_branch = rng.gen_range(1..=3);
        let weights: Vec<u32> = (0..n_branch).map(|_| rng.gen_range(1..=10)).collect();
        // some actions leave part of the mass as an implicit no-op
        let scale = if rng.gen_bool(0.3) { rng.gen_range(0.5..1.0) } else { 1.0 };
        let total: u32 = weights.iter().sum();
        let mut effect = Vec::new();
        for w in weights {
            let p = (w as f64 / total as f64 * scale * 1e6).floor() / 1e6;
            effect.push(Branch {
                probability: p,
                literals: random_literals(rng, n_pred, 3),
            });
        }
        d.actions.push(Action {
            name: format!("a{a}"),
            precondition: random_literals(rng, n_pred, 2),
            effect,
        });
    }
    let init = (0..n_pred).filter(|_| rng.gen_bool(0.4)).map(|i| format!("p{i}")).collect();
    let goal = {
        let g = random_literals(rng, n_pred, 3);
        if g.is_empty() {
            vec![Literal::pos("p0")]
        } else {
            g
        }
    };
    let p = Problem {
        name: "random".into(),
        domain: "random".into(),
        init,
        goal,
    };
    (d, p)
}

fn vi_config() -> PlannerConfig {
    PlannerConfig {
        algorithm: Algorithm::ValueIteration,
        ..PlannerConfig::default()
    }
}

/// Yields 50 solvable random tasks, skipping unsolvable draws.
fn solvable_tasks() -> Vec<GroundedTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    let mut draws = 0;
    while out.len() < 50 {
        draws += 1;
        assert!(draws < 10_000);
        let (d, p) = random_task(&mut rng);
        let t = GroundedTask::new(&d, &p).unwrap();
        match solve(&t, &vi_config()) {
            Ok(_) => out.push(t),
            Err(PlannerError::GoalUnreachable) => continue,
            Err(e) => panic!("{e}"),
        }
    }
    out
}

#[test]
fn lrtdp_matches_value_iteration_on_random_domains() {
    let mut worst: f64 = 0.0;
    for t in solvable_tasks() {
        let l = solve(&t, &PlannerConfig::default()).unwrap();
        let v = solve(&t, &vi_config()).unwrap();
        let gap = (l.initial_value - v.initial_value).abs();
        worst = worst.max(gap);
        assert!(gap <= 2e-4, "lrtdp {} vi {}", l.initial_value, v.initial_value);
    }
    assert!(worst <= 2e-4);
}

#[test]
fn policy_values_are_bellman_consistent() {
    let cfg = PlannerConfig::default();
    for t in solvable_tasks() {
        let policy = solve(&t, &cfg).unwrap();
        for (s, &a) in &policy.actions {
            let v = policy.value(s).unwrap();
            if t.is_goal(s) {
                assert_eq!(v, 0.0);
                assert_eq!(a, None);
                continue;
            }
            let Some(a) = a else {
                assert!(v >= cfg.dead_end_cost);
                continue;
            };
            let expected: f64 = 1.0
                + t.actions[a]
                    .successors(s)
                    .iter()
                    .map(|(p, n)| p * policy.value(n).unwrap())
                    .sum::<f64>();
            assert!((v - expected).abs() <= cfg.epsilon * (1.0 + v.abs() * 1e-6) * 10.0, "{v} vs {expected}");
        }
    }
}

#[test]
fn goal_states_absorb_rollouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in solvable_tasks().into_iter().take(20) {
        let policy = solve(&t, &PlannerConfig::default()).unwrap();
        for (s, a) in &policy.actions {
            if t.is_goal(s) {
                assert_eq!(*a, None);
            }
        }
        let plan = extract_linear_plan(&t, &policy, &mut rng, 100_000).unwrap();
        assert_eq!(plan.is_empty(), t.is_goal(&t.init));
        assert!(simulate_policy(&t, &policy, 50, 10 * plan.len().max(1) + 50, &mut rng) > 0.0);

        // starting inside the goal: nothing to do, every rollout succeeds at once
        let mut at_goal = t.clone();
        at_goal.init = policy.actions.keys().find(|s| t.is_goal(s)).unwrap().clone();
        let p2 = solve(&at_goal, &PlannerConfig::default()).unwrap();
        assert_eq!(p2.initial_value, 0.0);
        assert!(extract_linear_plan(&at_goal, &p2, &mut rng, 10).unwrap().is_empty());
        assert_eq!(simulate_policy(&at_goal, &p2, 10, 0, &mut rng), 1.0);
    }
}
