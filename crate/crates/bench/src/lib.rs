//! Shared inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2p_core::ppddl::{Action, Branch, Domain, Literal, Problem};

/// Gaussian-ish blobs in the unit square, `per` points around each centre.
pub fn blobs(centres: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(centres.len() * per);
    for c in centres {
        for _ in 0..per {
            let dx: f64 = rng.gen_range(-spread..spread) + rng.gen_range(-spread..spread);
            let dy: f64 = rng.gen_range(-spread..spread) + rng.gen_range(-spread..spread);
            out.push(vec![(c[0] + dx).clamp(0.0, 1.0), (c[1] + dy).clamp(0.0, 1.0)]);
        }
    }
    out
}

/// A chain of `n` cells. Each step advances with probability 0.8 and, past
/// the first cell, falls back to the start with probability 0.05.
pub fn noisy_chain(n: usize) -> (Domain, Problem) {
    let mut d = Domain::new("chain");
    d.predicates = (0..n).map(|i| format!("at{i}")).collect();
    for i in 0..n - 1 {
        let mut effect = vec![Branch {
            probability: 0.8,
            literals: vec![Literal::neg(format!("at{i}")), Literal::pos(format!("at{}", i + 1))],
        }];
        if i > 0 {
            effect.push(Branch {
                probability: 0.05,
                literals: vec![Literal::neg(format!("at{i}")), Literal::pos("at0")],
            });
        }
        d.actions.push(Action {
            name: format!("step{i}"),
            precondition: vec![Literal::pos(format!("at{i}"))],
            effect,
        });
    }
    let p = Problem {
        name: "chain".into(),
        domain: "chain".into(),
        init: vec!["at0".into()],
        goal: vec![Literal::pos(format!("at{}", n - 1))],
    };
    (d, p)
}
