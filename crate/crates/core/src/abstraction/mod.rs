//! From option transitions to a probabilistic symbolic domain.

pub mod dbscan;
pub mod factors;
pub mod generate;
pub mod kde;
pub mod partition;
pub mod precondition;
pub mod report;
pub mod svm;
pub mod vocabulary;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use factors::{compute_factors, Factor};
pub use generate::{action_name, generate_ppddl, parse_action_name, GeneratedOperator};
pub use partition::{partition_option_samples, Mask, Outcome, PartitionedOption};
pub use precondition::{fit_precondition_classifier, PreconditionClassifier};
pub use report::render_report;
pub use vocabulary::{build_vocabulary, resolve_goal, GoalSpec, GoalValue, SymbolDef, SymbolOrigin, SymbolicVocabulary};

use crate::options::{OptionDef, TransitionSample};
use crate::ppddl::{Domain, Problem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbstractionConfig {
    /// DBSCAN radius on terminal values of changed variables.
    pub eps: f64,
    pub min_samples: usize,
    /// A variable counts as changed when it moves by more than this.
    pub change_tolerance: f64,
    /// Fraction of a cluster's samples that must change a variable for it to
    /// enter the mask.
    pub mask_fraction: f64,
    /// Effect clusters sharing this fraction of initiation states are
    /// outcomes of one partition.
    pub overlap_fraction: f64,
    /// Grid L1 distance below which two symbols on a factor are merged.
    pub sym_merge_eps: f64,
    pub grid_cells: usize,
    pub min_bandwidth: f64,
    /// Local mass a symbol needs near a point to cover it.
    pub cover_min: f64,
    /// Half-width of the neighbourhood used for coverage and support.
    pub support_radius: f64,
    pub svm_c: f64,
    pub gamma_grid: Vec<f64>,
    pub max_class_samples: usize,
    pub holdout_fraction: f64,
    /// Minimum drop in balanced accuracy for a factor to be relevant.
    pub relevance_threshold: f64,
    pub permutation_repeats: usize,
    pub low_confidence_accuracy: f64,
    pub precond_accept: f64,
    pub precond_samples: usize,
    pub max_conj: usize,
    /// Fix factors on which every positive agrees but some negative differs.
    pub pin_constant_factors: bool,
    pub max_operators: usize,
    pub seed: u64,
    pub domain_name: String,
    pub problem_name: String,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        AbstractionConfig {
            eps: 0.05,
            min_samples: 5,
            change_tolerance: 0.01,
            mask_fraction: 0.9,
            overlap_fraction: 0.05,
            sym_merge_eps: 0.1,
            grid_cells: 32,
            min_bandwidth: 0.005,
            cover_min: 0.05,
            support_radius: 0.02,
            svm_c: 10.0,
            gamma_grid: vec![10.0, 100.0, 1000.0],
            max_class_samples: 400,
            holdout_fraction: 0.2,
            relevance_threshold: 0.05,
            permutation_repeats: 3,
            low_confidence_accuracy: 0.6,
            precond_accept: 0.95,
            precond_samples: 100,
            max_conj: 3,
            pin_constant_factors: true,
            max_operators: 5000,
            seed: 0,
            domain_name: "treasure-domain".to_string(),
            problem_name: "treasure-problem".to_string(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbstractionError {
    #[error("every sample of option {option_id} is noise")]
    AllNoise { option_id: usize },
    #[error("a precondition classifier needs both positive and negative samples")]
    DegenerateClasses,
    #[error("no operator passed its precondition check")]
    NoOperatorsGenerated,
    #[error("goal cannot be expressed: {0}")]
    UnreachableGoalSymbols(String),
    #[error("no admitted transitions")]
    EmptyDataset,
}

/// Everything the abstraction produced.
#[derive(Debug, Clone)]
pub struct Abstraction {
    pub variables: Vec<String>,
    pub partitions: Vec<PartitionedOption>,
    pub factors: Vec<Factor>,
    pub vocabulary: SymbolicVocabulary,
    /// One per partition; `None` when the partition could not be classified.
    pub classifiers: Vec<Option<PreconditionClassifier>>,
    pub operators: Vec<GeneratedOperator>,
    pub goal_symbols: Vec<usize>,
    pub domain: Domain,
    pub problem: Problem,
    pub admitted: usize,
    pub warnings: Vec<String>,
}

/// The serializable part of an [`Abstraction`], read back by the executor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionArtifact {
    pub variables: Vec<String>,
    pub factors: Vec<Factor>,
    pub partitions: Vec<PartitionedOption>,
    pub classifiers: Vec<Option<ClassifierSummary>>,
    pub operators: Vec<GeneratedOperator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSummary {
    pub factors: Vec<usize>,
    pub pinned: Vec<usize>,
    pub heldout_accuracy: f64,
    pub balanced_accuracy: f64,
    pub low_confidence: bool,
}

impl Abstraction {
    pub fn artifact(&self) -> PartitionArtifact {
        PartitionArtifact {
            variables: self.variables.clone(),
            factors: self.factors.clone(),
            partitions: self.partitions.clone(),
            classifiers: self
                .classifiers
                .iter()
                .map(|c| {
                    c.as_ref().map(|c| ClassifierSummary {
                        factors: c.factors.clone(),
                        pinned: c.pinned.iter().map(|p| p.0).collect(),
                        heldout_accuracy: c.heldout_accuracy,
                        balanced_accuracy: c.balanced_accuracy,
                        low_confidence: c.low_confidence,
                    })
                })
                .collect(),
            operators: self.operators.clone(),
        }
    }

    /// Mean held-out accuracy over the classified partitions.
    pub fn mean_classifier_accuracy(&self) -> f64 {
        let acc: Vec<f64> = self.classifiers.iter().flatten().map(|c| c.heldout_accuracy).collect();
        acc.iter().sum::<f64>() / acc.len().max(1) as f64
    }
}

impl PartitionArtifact {
    pub fn partition(&self, option_id: usize, partition_id: usize) -> Option<&PartitionedOption> {
        self.partitions
            .iter()
            .find(|p| p.option_id == option_id && p.partition_id == partition_id)
    }
}

/// Run the whole abstraction: partition, factor, name symbols, learn
/// preconditions and emit operators.
pub fn abstract_dataset(
    variables: &[String],
    dataset: &[TransitionSample],
    options: &[OptionDef],
    start: &[f64],
    goal: &[GoalSpec],
    cfg: &AbstractionConfig,
) -> Result<Abstraction, AbstractionError> {
    let mut warnings = Vec::new();
    let admitted: Vec<usize> = (0..dataset.len()).filter(|&i| dataset[i].admitted()).collect();
    if admitted.is_empty() {
        return Err(AbstractionError::EmptyDataset);
    }
    let mut by_option: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in &admitted {
        by_option.entry(dataset[i].option_id).or_default().push(i);
    }

    let mut partitions = Vec::new();
    for opt in options {
        let Some(indices) = by_option.get(&opt.id) else {
            warnings.push(format!("option {} has no admitted samples", opt.id));
            continue;
        };
        match partition_option_samples(dataset, indices, cfg) {
            Ok(parts) => partitions.extend(parts),
            Err(AbstractionError::AllNoise { option_id }) => {
                warnings.push(format!("option {option_id}: every sample is noise"));
            }
            Err(e) => return Err(e),
        }
    }

    let mut masks: Vec<Vec<usize>> = partitions.iter().map(|p| p.mask.changed_vars.clone()).collect();
    masks.extend(partitions.iter().flat_map(|p| p.outcomes.iter().map(|o| o.mask.clone())));
    let factors = compute_factors(&masks, variables.len());
    let vocabulary = build_vocabulary(&partitions, &factors, start, cfg);
    let goal_symbols = resolve_goal(&vocabulary, variables, start, goal, cfg)?;

    let pool = precondition::StatePool::new(dataset);
    let candidates: Vec<Factor> = factors.iter().filter(|f| !f.residual).cloned().collect();
    let fitted: Vec<(Vec<Vec<f64>>, Result<PreconditionClassifier, AbstractionError>)> = (0..partitions.len())
        .into_par_iter()
        .map(|i| {
            let part = &partitions[i];
            let siblings: Vec<&PartitionedOption> =
                partitions.iter().filter(|p| p.option_id == part.option_id).collect();
            let own = siblings.iter().position(|p| p.partition_id == part.partition_id).unwrap();
            let seed = cfg.seed ^ (i as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (pos, neg) = precondition::training_sets(dataset, &pool, &siblings, own, cfg, &mut rng);
            let clf = fit_precondition_classifier(&pos, &neg, &candidates, cfg, seed);
            (pos, clf)
        })
        .collect();
    let mut classifiers = Vec::new();
    let mut positives = Vec::new();
    for (part, (pos, clf)) in partitions.iter().zip(fitted) {
        match clf {
            Ok(c) => {
                if c.low_confidence {
                    warnings.push(format!(
                        "option {} partition {}: low-confidence precondition (accuracy {:.3})",
                        part.option_id, part.partition_id, c.heldout_accuracy
                    ));
                }
                classifiers.push(Some(c));
            }
            Err(e) => {
                warnings.push(format!("option {} partition {}: {e}", part.option_id, part.partition_id));
                classifiers.push(None);
            }
        }
        positives.push(pos);
    }

    let (domain, problem, operators) =
        generate_ppddl(&vocabulary, &partitions, &classifiers, &positives, &goal_symbols, cfg)?;
    Ok(Abstraction {
        variables: variables.to_vec(),
        partitions,
        factors,
        vocabulary,
        classifiers,
        operators,
        goal_symbols,
        domain,
        problem,
        admitted: admitted.len(),
        warnings,
    })
}
