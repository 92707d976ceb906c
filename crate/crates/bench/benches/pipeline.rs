use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use s2p_bench::{blobs, noisy_chain};
use s2p_core::abstraction::dbscan::dbscan;
use s2p_core::abstraction::kde::{grid_l1, Kde};
use s2p_core::abstraction::svm::{Svm, SvmParams};
use s2p_core::abstraction::{abstract_dataset, AbstractionConfig, GoalSpec};
use s2p_core::discovery::{collect_transitions, discover_options, CollectConfig, DiscoveryConfig};
use s2p_core::env::reference_map;
use s2p_core::planner::{extract_linear_plan, solve, Algorithm, GroundedTask, PlannerConfig};
use s2p_core::ppddl::{emit_domain, parse_domain};

fn discovery(c: &mut Criterion) {
    let map = reference_map();
    c.bench_function("discover_options", |b| {
        b.iter(|| discover_options(black_box(&map), &DiscoveryConfig::default()))
    });
    let options = discover_options(&map, &DiscoveryConfig::default());
    let cfg = CollectConfig {
        budget: 5_000,
        min_per_option: usize::MAX,
        ..CollectConfig::default()
    };
    c.bench_function("collect_5k_executions", |b| b.iter(|| collect_transitions(&map, &options, &cfg)));
}

fn clustering(c: &mut Criterion) {
    let centres = [[0.1, 0.1], [0.5, 0.8], [0.9, 0.3]];
    let mut g = c.benchmark_group("dbscan");
    for per in [100, 400, 1600] {
        let pts = blobs(&centres, per, 0.02, 1);
        let w = vec![1.0; pts.len()];
        g.bench_with_input(BenchmarkId::from_parameter(pts.len()), &pts, |b, pts| {
            b.iter(|| dbscan(pts, &w, 0.05, 5.0))
        });
    }
    g.finish();
}

fn densities(c: &mut Criterion) {
    let a_pts = blobs(&[[0.3, 0.4]], 500, 0.03, 2);
    let b_pts = blobs(&[[0.32, 0.41]], 500, 0.03, 3);
    let ones = vec![1.0; 500];
    c.bench_function("kde_fit_500", |b| b.iter(|| Kde::fit(&a_pts, &ones, 0.005)));
    let ka = Kde::fit(&a_pts, &ones, 0.005);
    let kb = Kde::fit(&b_pts, &ones, 0.005);
    c.bench_function("kde_grid_l1_32", |b| b.iter(|| grid_l1(&ka, &kb, 32)));
}

fn classifiers(c: &mut Criterion) {
    let pos = blobs(&[[0.2, 0.2], [0.6, 0.7]], 100, 0.03, 4);
    let neg = blobs(&[[0.5, 0.2], [0.2, 0.7]], 100, 0.03, 5);
    let x: Vec<Vec<f64>> = pos.iter().chain(&neg).cloned().collect();
    let y: Vec<bool> = (0..x.len()).map(|i| i < pos.len()).collect();
    c.bench_function("svm_fit_400", |b| b.iter(|| Svm::fit(&x, &y, &SvmParams::default())));
}

fn planning(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_chain");
    for n in [16, 64] {
        let (d, p) = noisy_chain(n);
        let task = GroundedTask::new(&d, &p).unwrap();
        for alg in [Algorithm::Lrtdp, Algorithm::ValueIteration] {
            let cfg = PlannerConfig {
                algorithm: alg,
                ..PlannerConfig::default()
            };
            g.bench_with_input(BenchmarkId::new(format!("{alg:?}"), n), &task, |b, t| b.iter(|| solve(t, &cfg)));
        }
    }
    g.finish();
}

/// Abstraction and planning on the reference data set.
fn end_to_end(c: &mut Criterion) {
    let map = reference_map();
    let names = map.variable_names();
    let options = discover_options(&map, &DiscoveryConfig::default());
    let samples = collect_transitions(
        &map,
        &options,
        &CollectConfig {
            budget: 200_000,
            min_per_option: 10_000,
            episode_len: 2_000,
            ..CollectConfig::default()
        },
    )
    .samples;
    let start = map.state_vector(&map.reset()).0;
    let goal: Vec<GoalSpec> = ["treasure_held=1", "agent_y=start"].iter().map(|g| g.parse().unwrap()).collect();
    let cfg = AbstractionConfig {
        eps: 0.03,
        max_conj: 4,
        ..AbstractionConfig::default()
    };
    let mut g = c.benchmark_group("reference");
    g.sample_size(10);
    g.bench_function("abstract_reference", |b| {
        b.iter(|| abstract_dataset(&names, &samples, &options, &start, &goal, &cfg))
    });
    let a = abstract_dataset(&names, &samples, &options, &start, &goal, &cfg).expect("reference abstraction");
    let text = emit_domain(&a.domain);
    g.bench_function("parse_domain", |b| b.iter(|| parse_domain(black_box(&text))));
    let task = GroundedTask::new(&a.domain, &a.problem).unwrap();
    g.bench_function("solve_lrtdp", |b| b.iter(|| solve(&task, &PlannerConfig::default())));
    if let Ok(policy) = solve(&task, &PlannerConfig::default()) {
        g.bench_function("extract_plan", |b| {
            b.iter(|| extract_linear_plan(&task, &policy, &mut ChaCha8Rng::seed_from_u64(0), 10_000))
        });
    }
    g.finish();
}

criterion_group!(benches, discovery, clustering, densities, classifiers, planning, end_to_end);
criterion_main!(benches);
