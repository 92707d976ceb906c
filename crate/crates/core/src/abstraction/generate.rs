//! Operator generation: one probabilistic action per accepted precondition
//! conjunction of each partition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::{key, PartitionedOption};
use super::precondition::PreconditionClassifier;
use super::vocabulary::SymbolicVocabulary;
use super::{AbstractionConfig, AbstractionError};
use crate::ppddl::{Action, Branch, Domain, Literal, Problem};

/// Upper bound on conjunctions tried for one partition.
const MAX_CANDIDATES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedOperator {
    pub action: String,
    /// Index into the partition list.
    pub partition_index: usize,
    pub option_id: usize,
    pub partition_id: usize,
    /// Precondition symbols, one per relevant factor.
    pub conjunction: Vec<usize>,
}

/// Action names are `opt<option>_p<partition>_c<conjunction>`.
pub fn action_name(option_id: usize, partition_id: usize, conjunction: usize) -> String {
    format!("opt{option_id}_p{partition_id}_c{conjunction}")
}

/// Inverse of [`action_name`].
pub fn parse_action_name(name: &str) -> Option<(usize, usize, usize)> {
    let rest = name.strip_prefix("opt")?;
    let (o, rest) = rest.split_once("_p")?;
    let (p, c) = rest.split_once("_c")?;
    let num = |s: &str| -> Option<usize> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse().ok()
    };
    Some((num(o)?, num(p)?, num(c)?))
}

/// Round `counts / total` to multiples of 1e-6 that sum to exactly one,
/// by largest remainder.
pub fn quantize_probabilities(counts: &[usize]) -> Vec<f64> {
    const UNITS: u128 = 1_000_000;
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    let scaled: Vec<u128> = counts.iter().map(|&c| c as u128 * UNITS).collect();
    let mut units: Vec<u128> = scaled.iter().map(|s| s / total).collect();
    let mut short = UNITS - units.iter().sum::<u128>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] % total).cmp(&(scaled[a] % total)).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if short == 0 {
            break;
        }
        units[i] += 1;
        short -= 1;
    }
    units.iter().map(|&u| u as f64 / UNITS as f64).collect()
}

struct Gate<'a> {
    vocab: &'a SymbolicVocabulary,
    classifier: &'a PreconditionClassifier,
    /// Positive initiation states restricted to the classifier's dims.
    support: Vec<Vec<f64>>,
    /// Per conjunction slot: the positions of the factor's vars within the
    /// classifier dims, or the pinned value the factor must keep.
    slots: Vec<Slot>,
}

enum Slot {
    Dims(Vec<usize>),
    Pinned(Vec<f64>),
}

impl Gate<'_> {
    fn inside(&self, x: &[f64], radius: f64) -> bool {
        self.classifier.probability_projected(x) >= 0.5
            && self
                .support
                .iter()
                .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= radius))
    }

    /// Draw states from the conjunction's symbols; accept when at least
    /// `precond_accept` of them fall inside the precondition.
    fn accepts(&self, conj: &[usize], cfg: &AbstractionConfig, rng: &mut ChaCha8Rng) -> bool {
        let n = cfg.precond_samples;
        let allowed = ((1.0 - cfg.precond_accept) * n as f64 + 1e-9).floor() as usize;
        let mut fails = 0;
        let mut x = vec![0.0; self.classifier.dims.len()];
        for _ in 0..n {
            let mut pinned_ok = true;
            for (slot, &sym) in self.slots.iter().zip(conj) {
                let v = self.vocab.symbols[sym].distribution.sample(rng);
                match slot {
                    Slot::Dims(pos) => {
                        for (&p, val) in pos.iter().zip(v) {
                            x[p] = val;
                        }
                    }
                    Slot::Pinned(want) => {
                        pinned_ok &= want.iter().zip(v).all(|(a, b)| (a - b).abs() <= cfg.support_radius);
                    }
                }
            }
            if !(pinned_ok && self.inside(&x, cfg.support_radius)) {
                fails += 1;
                if fails > allowed {
                    return false;
                }
            }
        }
        true
    }
}

fn covering_symbols(vocab: &SymbolicVocabulary, f: usize, points: &[Vec<f64>], cfg: &AbstractionConfig) -> Vec<usize> {
    vocab
        .symbols_on(f)
        .filter(|s| {
            points
                .iter()
                .any(|p| vocab.local_mass(s.id, p, cfg.support_radius) >= cfg.cover_min)
        })
        .map(|s| s.id)
        .collect()
}

/// Accepted conjunctions for one partition, in enumeration order, over the
/// classifier factors followed by the pinned factors.
fn partition_conjunctions(
    vocab: &SymbolicVocabulary,
    classifier: &PreconditionClassifier,
    positives: &[Vec<f64>],
    cfg: &AbstractionConfig,
    seed: u64,
) -> Vec<Vec<usize>> {
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    let mut slots = Vec::new();
    for &f in &classifier.factors {
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for p in positives {
            let q = vocab.project(f, p);
            if seen.insert(key(&q)) {
                points.push(q);
            }
        }
        let syms = covering_symbols(vocab, f, &points, cfg);
        if syms.is_empty() {
            return Vec::new();
        }
        candidates.push(syms);
        slots.push(Slot::Dims(
            vocab.factors[f]
                .vars
                .iter()
                .map(|v| classifier.dims.iter().position(|d| d == v).expect("factor var in dims"))
                .collect(),
        ));
    }
    // a pinned value no symbol expresses cannot be required
    for (f, value) in &classifier.pinned {
        let syms = covering_symbols(vocab, *f, std::slice::from_ref(value), cfg);
        if !syms.is_empty() {
            candidates.push(syms);
            slots.push(Slot::Pinned(value.clone()));
        }
    }
    let gate = Gate {
        vocab,
        classifier,
        support: positives
            .iter()
            .map(|p| classifier.dims.iter().map(|&d| p[d]).collect())
            .collect(),
        slots,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = Vec::new();
    let mut index = vec![0usize; candidates.len()];
    for _ in 0..MAX_CANDIDATES {
        let conj: Vec<usize> = index.iter().zip(&candidates).map(|(&i, c)| c[i]).collect();
        if gate.accepts(&conj, cfg, &mut rng) {
            accepted.push(conj);
        }
        // odometer, last factor fastest
        let mut k = candidates.len();
        loop {
            if k == 0 {
                return accepted;
            }
            k -= 1;
            index[k] += 1;
            if index[k] < candidates[k].len() {
                break;
            }
            index[k] = 0;
        }
    }
    accepted
}

fn effect_branches(vocab: &SymbolicVocabulary, part: &PartitionedOption, part_index: usize) -> Vec<Branch> {
    let counts: Vec<usize> = part.outcomes.iter().map(|o| o.count).collect();
    let probs = quantize_probabilities(&counts);
    part.outcomes
        .iter()
        .enumerate()
        .filter(|(k, _)| probs[*k] > 0.0)
        .map(|(k, _)| {
            let mut literals = Vec::new();
            for &(f, sym) in &vocab.outcome_symbols[part_index][k] {
                literals.push(Literal::pos(&vocab.symbols[sym].name));
                for other in vocab.symbols_on(f).filter(|s| s.id != sym) {
                    literals.push(Literal::neg(&other.name));
                }
            }
            Branch {
                probability: probs[k],
                literals,
            }
        })
        .collect()
}

/// Build the domain and problem. `classifiers[i]` and `positives[i]` belong
/// to `partitions[i]`; a partition without a classifier gets no operator.
pub fn generate_ppddl(
    vocab: &SymbolicVocabulary,
    partitions: &[PartitionedOption],
    classifiers: &[Option<PreconditionClassifier>],
    positives: &[Vec<Vec<f64>>],
    goal_symbols: &[usize],
    cfg: &AbstractionConfig,
) -> Result<(Domain, Problem, Vec<GeneratedOperator>), AbstractionError> {
    let per_partition: Vec<Vec<Vec<usize>>> = (0..partitions.len())
        .into_par_iter()
        .map(|i| match &classifiers[i] {
            Some(c) => {
                let seed = cfg.seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                partition_conjunctions(vocab, c, &positives[i], cfg, seed)
            }
            None => Vec::new(),
        })
        .collect();

    let mut domain = Domain::new(&cfg.domain_name);
    domain.predicates = vocab.symbols.iter().map(|s| s.name.clone()).collect();
    let mut operators = Vec::new();
    'outer: for (i, conjunctions) in per_partition.into_iter().enumerate() {
        let part = &partitions[i];
        let effect = effect_branches(vocab, part, i);
        for (j, conj) in conjunctions.into_iter().enumerate() {
            if operators.len() >= cfg.max_operators {
                log::warn!("operator cap of {} reached", cfg.max_operators);
                break 'outer;
            }
            let name = action_name(part.option_id, part.partition_id, j);
            domain.actions.push(Action {
                name: name.clone(),
                precondition: conj.iter().map(|&s| Literal::pos(&vocab.symbols[s].name)).collect(),
                effect: effect.clone(),
            });
            operators.push(GeneratedOperator {
                action: name,
                partition_index: i,
                option_id: part.option_id,
                partition_id: part.partition_id,
                conjunction: conj,
            });
        }
    }
    if operators.is_empty() {
        return Err(AbstractionError::NoOperatorsGenerated);
    }
    let problem = Problem {
        name: cfg.problem_name.clone(),
        domain: cfg.domain_name.clone(),
        init: vocab.start_symbols.iter().map(|&s| vocab.symbols[s].name.clone()).collect(),
        goal: goal_symbols.iter().map(|&s| Literal::pos(&vocab.symbols[s].name)).collect(),
    };
    Ok((domain, problem, operators))
}
