//! Splitting one option's executions into partitions with coherent effects.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::dbscan::dbscan;
use super::{AbstractionConfig, AbstractionError};
use crate::options::TransitionSample;

/// Variables an option partition reliably changes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mask {
    pub option_id: usize,
    pub partition_id: usize,
    pub changed_vars: Vec<usize>,
}

/// One effect cluster of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub probability: f64,
    pub count: usize,
    /// Variables changed by every sample of this outcome.
    pub mask: Vec<usize>,
    /// Distinct terminal values over `mask` with multiplicities.
    pub terminals: Vec<(Vec<f64>, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionedOption {
    pub option_id: usize,
    pub partition_id: usize,
    /// Indices into the dataset the partition was built from.
    #[serde(skip)]
    pub samples: Vec<usize>,
    pub mask: Mask,
    pub outcomes: Vec<Outcome>,
}

impl PartitionedOption {
    pub fn sample_count(&self) -> usize {
        self.outcomes.iter().map(|o| o.count).sum()
    }

    /// Whether `s_term` reached from `s_init` looks like one of the outcomes:
    /// same changed variables, and terminal values within `radius` (L∞) of a
    /// recorded terminal.
    pub fn matches(&self, s_init: &[f64], s_term: &[f64], tolerance: f64, radius: f64) -> Option<usize> {
        let changed = changed_vars(s_init, s_term, tolerance);
        self.outcomes.iter().position(|o| {
            o.mask == changed
                && o.terminals.iter().any(|(t, _)| {
                    o.mask
                        .iter()
                        .zip(t)
                        .all(|(&i, v)| (s_term[i] - v).abs() <= radius)
                })
        })
    }
}

pub fn changed_vars(s_init: &[f64], s_term: &[f64], tolerance: f64) -> Vec<usize> {
    s_init
        .iter()
        .zip(s_term)
        .enumerate()
        .filter(|(_, (a, b))| (*b - *a).abs() > tolerance)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn key(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Variables changed beyond `tolerance` in at least `fraction` of the samples.
pub fn compute_mask(samples: &[&TransitionSample], tolerance: f64, fraction: f64) -> Vec<usize> {
    let Some(first) = samples.first() else {
        return Vec::new();
    };
    let dim = first.s_init.len();
    let mut counts = vec![0usize; dim];
    for s in samples {
        for i in changed_vars(s.s_init.as_slice(), s.s_term.as_slice(), tolerance) {
            counts[i] += 1;
        }
    }
    let need = fraction * samples.len() as f64;
    (0..dim).filter(|&i| counts[i] as f64 >= need).collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut k = i;
        while self.0[k] != r {
            let next = self.0[k];
            self.0[k] = r;
            k = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Partition the executions of one option.
///
/// Samples are grouped by the exact set of variables they change and
/// clustered on the terminal values of those variables. Effect clusters
/// whose initiation states overlap by at least `overlap_fraction` are
/// outcomes of one stochastic partition; the rest are separate partitions.
/// `indices` are the samples' positions in `dataset`.
pub fn partition_option_samples(
    dataset: &[TransitionSample],
    indices: &[usize],
    cfg: &AbstractionConfig,
) -> Result<Vec<PartitionedOption>, AbstractionError> {
    let option_id = indices.first().map(|&i| dataset[i].option_id).unwrap_or(0);

    // group by changed set; within a group, distinct projected terminals
    let mut groups: BTreeMap<Vec<usize>, (Vec<Vec<f64>>, Vec<f64>, HashMap<Vec<u64>, usize>, Vec<Vec<usize>>)> =
        BTreeMap::new();
    for &idx in indices {
        let s = &dataset[idx];
        let changed = changed_vars(s.s_init.as_slice(), s.s_term.as_slice(), cfg.change_tolerance);
        if changed.is_empty() {
            continue;
        }
        let point: Vec<f64> = changed.iter().map(|&i| s.s_term[i]).collect();
        let g = groups.entry(changed).or_default();
        let k = key(&point);
        let slot = match g.2.get(&k) {
            Some(&slot) => slot,
            None => {
                g.0.push(point);
                g.1.push(0.0);
                g.3.push(Vec::new());
                g.2.insert(k, g.0.len() - 1);
                g.0.len() - 1
            }
        };
        g.1[slot] += 1.0;
        g.3[slot].push(idx);
    }

    // effect clusters: (changed set, member sample indices)
    let mut clusters: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (changed, (points, weights, _, members)) in &groups {
        let labels = dbscan(points, weights, cfg.eps, cfg.min_samples as f64);
        let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
        let base = clusters.len();
        clusters.extend((0..n_clusters).map(|_| (changed.clone(), Vec::new())));
        for (label, m) in labels.iter().zip(members) {
            if let Some(c) = label {
                clusters[base + c].1.extend(m);
            }
        }
    }
    if clusters.is_empty() {
        return Err(AbstractionError::AllNoise { option_id });
    }
    for c in &mut clusters {
        c.1.sort_unstable();
    }

    // merge clusters sharing initiation states
    let inits: Vec<HashMap<Vec<u64>, usize>> = clusters
        .iter()
        .map(|(_, m)| {
            let mut h = HashMap::new();
            for &i in m {
                *h.entry(key(dataset[i].s_init.as_slice())).or_insert(0) += 1;
            }
            h
        })
        .collect();
    let mut uf = UnionFind((0..clusters.len()).collect());
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            let shared_a: usize = inits[a].iter().filter(|(k, _)| inits[b].contains_key(*k)).map(|(_, c)| c).sum();
            let shared_b: usize = inits[b].iter().filter(|(k, _)| inits[a].contains_key(*k)).map(|(_, c)| c).sum();
            let total = clusters[a].1.len() + clusters[b].1.len();
            if (shared_a + shared_b) as f64 >= cfg.overlap_fraction * total as f64 && shared_a + shared_b > 0 {
                uf.union(a, b);
            }
        }
    }
    let mut merged: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 0..clusters.len() {
        let r = uf.find(c);
        merged.entry(r).or_default().push(c);
    }

    // deterministic order: by first sample index
    let mut parts: Vec<Vec<usize>> = merged.into_values().collect();
    for p in &mut parts {
        p.sort_by_key(|&c| clusters[c].1[0]);
    }
    parts.sort_by_key(|p| clusters[p[0]].1[0]);

    let mut out = Vec::new();
    for (partition_id, members) in parts.into_iter().enumerate() {
        let total: usize = members.iter().map(|&c| clusters[c].1.len()).sum();
        let mut samples: Vec<usize> = Vec::with_capacity(total);
        let mut outcomes = Vec::new();
        for &c in &members {
            let (changed, idxs) = &clusters[c];
            samples.extend(idxs);
            let mut terms: BTreeMap<Vec<u64>, (Vec<f64>, usize)> = BTreeMap::new();
            for &i in idxs {
                let v: Vec<f64> = changed.iter().map(|&k| dataset[i].s_term[k]).collect();
                terms.entry(key(&v)).or_insert((v, 0)).1 += 1;
            }
            let mut terminals: Vec<(Vec<f64>, usize)> = terms.into_values().collect();
            terminals.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
            outcomes.push(Outcome {
                probability: idxs.len() as f64 / total as f64,
                count: idxs.len(),
                mask: changed.clone(),
                terminals,
            });
        }
        samples.sort_unstable();
        let refs: Vec<&TransitionSample> = samples.iter().map(|&i| &dataset[i]).collect();
        let changed_vars = compute_mask(&refs, cfg.change_tolerance, cfg.mask_fraction);
        out.push(PartitionedOption {
            option_id,
            partition_id,
            samples,
            mask: Mask {
                option_id,
                partition_id,
                changed_vars,
            },
            outcomes,
        });
    }
    Ok(out)
}
