//! Precondition classifiers: where can a partition's effect be produced?

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::factors::Factor;
use super::partition::{key, PartitionedOption};
use super::svm::{Svm, SvmParams};
use super::{AbstractionConfig, AbstractionError};
use crate::options::TransitionSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionClassifier {
    /// Factors the decision depends on, ascending.
    pub factors: Vec<usize>,
    /// State variables fed to the model, ascending.
    pub dims: Vec<usize>,
    pub svm: Svm,
    pub heldout_accuracy: f64,
    pub balanced_accuracy: f64,
    pub low_confidence: bool,
    pub positives: usize,
    pub negatives: usize,
    /// Permutation importance per candidate factor.
    pub importance: Vec<(usize, f64)>,
    /// Factors outside `factors` on which every positive agrees while some
    /// negative does not, with the agreed value. Success was never observed
    /// elsewhere, so the precondition keeps them fixed.
    #[serde(default)]
    pub pinned: Vec<(usize, Vec<f64>)>,
}

impl PreconditionClassifier {
    /// Probability that a full state vector lies in the precondition.
    pub fn probability(&self, state: &[f64]) -> f64 {
        let x: Vec<f64> = self.dims.iter().map(|&d| state[d]).collect();
        self.svm.probability(&x)
    }

    /// Classifier factors and pinned factors, ascending.
    pub fn precondition_factors(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.factors.iter().copied().chain(self.pinned.iter().map(|p| p.0)).collect();
        out.sort_unstable();
        out
    }

    /// As [`Self::probability`] for a vector already restricted to `dims`.
    pub fn probability_projected(&self, x: &[f64]) -> f64 {
        self.svm.probability(x)
    }
}

/// Distinct initiation states with the options ever initiable there.
pub struct StatePool {
    pub states: Vec<Vec<f64>>,
    initiable: Vec<u64>,
}

impl StatePool {
    pub fn new(dataset: &[TransitionSample]) -> StatePool {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut pool = StatePool {
            states: Vec::new(),
            initiable: Vec::new(),
        };
        for s in dataset {
            let k = key(s.s_init.as_slice());
            let slot = *index.entry(k).or_insert_with(|| {
                pool.states.push(s.s_init.0.clone());
                pool.initiable.push(0);
                pool.states.len() - 1
            });
            for &o in &s.initiable {
                assert!(o < 64, "option ids above 63 are not supported");
                pool.initiable[slot] |= 1 << o;
            }
            pool.initiable[slot] |= 1 << s.option_id;
        }
        pool
    }

    fn never_initiable(&self, option_id: usize) -> impl Iterator<Item = &Vec<f64>> {
        self.states
            .iter()
            .zip(&self.initiable)
            .filter(move |(_, bits)| *bits & (1 << option_id) == 0)
            .map(|(s, _)| s)
    }
}

/// Distinct initiation states of a partition, in first-seen order.
pub fn partition_inits(dataset: &[TransitionSample], part: &PartitionedOption) -> Vec<Vec<f64>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &i in &part.samples {
        if seen.insert(key(dataset[i].s_init.as_slice())) {
            out.push(dataset[i].s_init.0.clone());
        }
    }
    out
}

fn take_capped(mut v: Vec<Vec<f64>>, cap: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if v.len() > cap {
        v.shuffle(rng);
        v.truncate(cap);
    }
    v
}

/// Positives are the partition's initiation states. Negatives are the
/// initiation states of the option's other partitions, then states where the
/// option was never initiable, each distinct state used once.
pub fn training_sets(
    dataset: &[TransitionSample],
    pool: &StatePool,
    siblings: &[&PartitionedOption],
    own: usize,
    cfg: &AbstractionConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let positives = partition_inits(dataset, siblings[own]);
    let pos_keys: HashSet<Vec<u64>> = positives.iter().map(|p| key(p)).collect();
    let mut seen = pos_keys.clone();
    let mut other = Vec::new();
    for (k, p) in siblings.iter().enumerate() {
        if k == own {
            continue;
        }
        for s in partition_inits(dataset, p) {
            if seen.insert(key(&s)) {
                other.push(s);
            }
        }
    }
    let option_id = siblings[own].option_id;
    let outside: Vec<Vec<f64>> = pool
        .never_initiable(option_id)
        .filter(|s| !seen.contains(&key(s)))
        .cloned()
        .collect();

    let positives = take_capped(positives, cfg.max_class_samples, rng);
    let mut negatives = take_capped(other, cfg.max_class_samples, rng);
    let room = cfg.max_class_samples - negatives.len();
    negatives.extend(take_capped(outside, room, rng));
    (positives, negatives)
}

fn balanced_accuracy(pred: &[bool], truth: &[bool]) -> f64 {
    let mut rates = Vec::new();
    for class in [true, false] {
        let total = truth.iter().filter(|&&t| t == class).count();
        if total > 0 {
            let hit = pred.iter().zip(truth).filter(|(&p, &t)| t == class && p == t).count();
            rates.push(hit as f64 / total as f64);
        }
    }
    rates.iter().sum::<f64>() / rates.len().max(1) as f64
}

fn accuracy(pred: &[bool], truth: &[bool]) -> f64 {
    let hit = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hit as f64 / truth.len().max(1) as f64
}

fn project(rows: &[Vec<f64>], dims: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| dims.iter().map(|&d| r[d]).collect()).collect()
}

fn predict_all(svm: &Svm, rows: &[Vec<f64>]) -> Vec<bool> {
    rows.iter().map(|r| svm.predict(r)).collect()
}

/// Stratified split of `0..n` into (train, holdout).
fn stratified_split(labels: &[bool], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut hold = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let n_hold = if idx.len() >= 2 {
            ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1)
        } else {
            0
        };
        hold.extend_from_slice(&idx[..n_hold]);
        train.extend_from_slice(&idx[n_hold..]);
    }
    train.sort_unstable();
    hold.sort_unstable();
    (train, hold)
}

/// Fit an RBF classifier separating `positives` from `negatives`, keeping
/// only the candidate factors whose permutation importance exceeds the
/// relevance threshold (at most `max_conj`, at least one).
pub fn fit_precondition_classifier(
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    candidates: &[Factor],
    cfg: &AbstractionConfig,
    seed: u64,
) -> Result<PreconditionClassifier, AbstractionError> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(AbstractionError::DegenerateClasses);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = positives.iter().chain(negatives).cloned().collect();
    let labels: Vec<bool> = (0..rows.len()).map(|i| i < positives.len()).collect();
    let (train, hold) = stratified_split(&labels, cfg.holdout_fraction, &mut rng);
    let sub = |idx: &[usize], dims: &[usize]| -> (Vec<Vec<f64>>, Vec<bool>) {
        let x = idx.iter().map(|&i| dims.iter().map(|&d| rows[i][d]).collect()).collect();
        let y = idx.iter().map(|&i| labels[i]).collect();
        (x, y)
    };
    let fit = |x: &[Vec<f64>], y: &[bool], gamma: f64| -> Option<Svm> {
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            return None;
        }
        Some(Svm::fit(x, y, &SvmParams { c: cfg.svm_c, gamma, ..SvmParams::default() }))
    };
    // score on the holdout, or on the training rows when the holdout is empty
    let score = |svm: &Svm, dims: &[usize], balanced: bool| -> f64 {
        let idx = if hold.is_empty() { &train } else { &hold };
        let (x, y) = sub(idx, dims);
        let pred = predict_all(svm, &x);
        if balanced {
            balanced_accuracy(&pred, &y)
        } else {
            accuracy(&pred, &y)
        }
    };

    let mut all_dims: Vec<usize> = candidates.iter().flat_map(|f| f.vars.iter().copied()).collect();
    all_dims.sort_unstable();

    // kernel width
    let (tx, ty) = sub(&train, &all_dims);
    let mut gamma = cfg.gamma_grid[0];
    let mut best = f64::NEG_INFINITY;
    for &g in &cfg.gamma_grid {
        if let Some(m) = fit(&tx, &ty, g) {
            let s = score(&m, &all_dims, true);
            if s > best {
                best = s;
                gamma = g;
            }
        }
    }

    // permutation importance on the full data set
    let full_x = project(&rows, &all_dims);
    let full_model = fit(&full_x, &labels, gamma).expect("both classes present");
    let base = balanced_accuracy(&predict_all(&full_model, &full_x), &labels);
    let mut importance = Vec::new();
    for f in candidates {
        let cols: Vec<usize> = f.vars.iter().map(|v| all_dims.iter().position(|d| d == v).unwrap()).collect();
        let constant = full_x.iter().all(|r| cols.iter().all(|&c| r[c] == full_x[0][c]));
        if constant {
            importance.push((f.id, 0.0));
            continue;
        }
        let mut drop = 0.0;
        for _ in 0..cfg.permutation_repeats {
            let mut perm: Vec<usize> = (0..full_x.len()).collect();
            perm.shuffle(&mut rng);
            let permuted: Vec<Vec<f64>> = full_x
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut r = r.clone();
                    for &c in &cols {
                        r[c] = full_x[perm[i]][c];
                    }
                    r
                })
                .collect();
            drop += base - balanced_accuracy(&predict_all(&full_model, &permuted), &labels);
        }
        importance.push((f.id, drop / cfg.permutation_repeats as f64));
    }

    let mut ranked = importance.clone();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut chosen: Vec<usize> = ranked
        .iter()
        .filter(|(_, imp)| *imp > cfg.relevance_threshold)
        .map(|(f, _)| *f)
        .take(cfg.max_conj)
        .collect();
    if chosen.is_empty() {
        chosen.push(ranked[0].0);
    }
    chosen.sort_unstable();
    let mut dims: Vec<usize> = candidates
        .iter()
        .filter(|f| chosen.contains(&f.id))
        .flat_map(|f| f.vars.iter().copied())
        .collect();
    dims.sort_unstable();

    let pinned = if cfg.pin_constant_factors {
        pinned_factors(positives, negatives, candidates, &chosen, cfg.change_tolerance)
    } else {
        Vec::new()
    };

    let (tx, ty) = sub(&train, &dims);
    let (heldout_accuracy, balanced) = match fit(&tx, &ty, gamma) {
        Some(m) => (score(&m, &dims, false), score(&m, &dims, true)),
        None => (0.5, 0.5),
    };
    let final_x = project(&rows, &dims);
    let svm = fit(&final_x, &labels, gamma).expect("both classes present");
    Ok(PreconditionClassifier {
        factors: chosen,
        dims,
        svm,
        heldout_accuracy,
        balanced_accuracy: balanced,
        low_confidence: heldout_accuracy < cfg.low_confidence_accuracy,
        positives: positives.len(),
        negatives: negatives.len(),
        importance,
        pinned,
    })
}

fn pinned_factors(
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    candidates: &[Factor],
    chosen: &[usize],
    tolerance: f64,
) -> Vec<(usize, Vec<f64>)> {
    candidates
        .iter()
        .filter(|f| !chosen.contains(&f.id))
        .filter_map(|f| {
            let value: Vec<f64> = f.vars.iter().map(|&d| positives[0][d]).collect();
            let agrees = |r: &Vec<f64>| f.vars.iter().zip(&value).all(|(&d, v)| (r[d] - v).abs() <= tolerance);
            (positives.iter().all(agrees) && !negatives.iter().all(agrees)).then_some((f.id, value))
        })
        .collect()
}
