use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A group of state variables that always change together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub id: usize,
    pub vars: Vec<usize>,
    /// Variables that appear in no mask.
    pub residual: bool,
}

/// Variables `i` and `j` share a factor iff exactly the same masks contain
/// them. Factors are ordered by their smallest variable; the residual factor
/// of unmasked variables comes last.
pub fn compute_factors(masks: &[Vec<usize>], dim: usize) -> Vec<Factor> {
    let mut distinct: Vec<&Vec<usize>> = masks.iter().collect();
    distinct.sort();
    distinct.dedup();
    let mut classes: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for var in 0..dim {
        let signature: Vec<bool> = distinct.iter().map(|m| m.contains(&var)).collect();
        classes.entry(signature).or_default().push(var);
    }
    let mut masked: Vec<Vec<usize>> = Vec::new();
    let mut residual = Vec::new();
    for (signature, vars) in classes {
        if signature.iter().any(|&b| b) {
            masked.push(vars);
        } else {
            residual = vars;
        }
    }
    masked.sort();
    let mut factors: Vec<Factor> = masked
        .into_iter()
        .enumerate()
        .map(|(id, vars)| Factor {
            id,
            vars,
            residual: false,
        })
        .collect();
    if !residual.is_empty() {
        factors.push(Factor {
            id: factors.len(),
            vars: residual,
            residual: true,
        });
    }
    factors
}

/// Index of the factor holding each variable.
pub fn factor_of_var(factors: &[Factor], dim: usize) -> Vec<usize> {
    let mut out = vec![usize::MAX; dim];
    for f in factors {
        for &v in &f.vars {
            out[v] = f.id;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vars(f: &[Factor]) -> Vec<Vec<usize>> {
        f.iter().map(|f| f.vars.clone()).collect()
    }

    #[test]
    fn definition_unrolled() {
        // masks {x}, {y}, {x} over (x, y, z, w)
        let f = compute_factors(&[vec![0], vec![1], vec![0]], 4);
        assert_eq!(vars(&f), vec![vec![0], vec![1], vec![2, 3]]);
        assert!(f[2].residual && !f[0].residual);
    }

    #[test]
    fn identical_masks_give_one_factor_and_the_rest() {
        let f = compute_factors(&[vec![1, 3], vec![1, 3]], 5);
        assert_eq!(vars(&f), vec![vec![1, 3], vec![0, 2, 4]]);
    }

    #[test]
    fn no_residual_when_everything_is_masked() {
        let f = compute_factors(&[vec![0, 1], vec![1]], 2);
        assert_eq!(vars(&f), vec![vec![0], vec![1]]);
        assert!(f.iter().all(|f| !f.residual));
    }

    proptest! {
        #[test]
        fn factors_partition_the_variables(
            masks in prop::collection::vec(prop::collection::btree_set(0usize..12, 1..5), 1..10)
        ) {
            let masks: Vec<Vec<usize>> = masks.into_iter().map(|m| m.into_iter().collect()).collect();
            let f = compute_factors(&masks, 12);
            let mut seen = [0; 12];
            for factor in &f {
                for &v in &factor.vars {
                    seen[v] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            // every mask is a union of whole factors
            for m in &masks {
                for factor in &f {
                    let inside = factor.vars.iter().filter(|v| m.contains(v)).count();
                    prop_assert!(inside == 0 || inside == factor.vars.len());
                }
            }
            // same membership iff same factor
            for a in 0..12 {
                for b in 0..12 {
                    let same_sig = masks.iter().all(|m| m.contains(&a) == m.contains(&b));
                    let fa = f.iter().position(|x| x.vars.contains(&a));
                    let fb = f.iter().position(|x| x.vars.contains(&b));
                    prop_assert_eq!(same_sig, fa == fb);
                }
            }
        }
    }
}
