//! Density-based clustering with sample weights.
//!
//! A point is a core point when the total weight inside its closed
//! `eps`-ball (itself included) reaches `min_samples`. Clusters grow from core
//! points in index order, so labels are deterministic.

/// Cluster label per point; `None` marks noise.
pub fn dbscan(points: &[Vec<f64>], weights: &[f64], eps: f64, min_samples: f64) -> Vec<Option<usize>> {
    assert_eq!(points.len(), weights.len());
    let n = points.len();
    let eps2 = eps * eps;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist2(&points[i], &points[j]) <= eps2).collect())
        .collect();
    let core: Vec<bool> = neighbours
        .iter()
        .map(|nb| nb.iter().map(|&j| weights[j]).sum::<f64>() >= min_samples)
        .collect();

    let mut labels = vec![None; n];
    let mut next = 0;
    for seed in 0..n {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        let id = next;
        next += 1;
        labels[seed] = Some(id);
        let mut frontier = vec![seed];
        while let Some(p) = frontier.pop() {
            for &q in &neighbours[p] {
                if labels[q].is_none() {
                    labels[q] = Some(id);
                    if core[q] {
                        frontier.push(q);
                    }
                }
            }
        }
    }
    labels
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_blobs_and_noise() {
        let p = pts(&[0.0, 0.01, 0.02, 0.5, 0.51, 0.52, 0.9]);
        let labels = dbscan(&p, &[1.0; 7], 0.05, 3.0);
        assert_eq!(
            labels,
            vec![Some(0), Some(0), Some(0), Some(1), Some(1), Some(1), None]
        );
    }

    #[test]
    fn too_few_points_are_noise() {
        let p = pts(&[0.1, 0.1, 0.1]);
        assert!(dbscan(&p, &[1.0; 3], 0.05, 5.0).iter().all(|l| l.is_none()));
    }

    #[test]
    fn border_points_join_but_do_not_expand() {
        // 0.0 and 0.04 are core; 0.08 is a border of 0.04; 0.125 neighbours
        // only the border point
        let p = pts(&[0.0, 0.0, 0.0, 0.04, 0.08, 0.125]);
        let labels = dbscan(&p, &[1.0; 6], 0.05, 4.0);
        assert_eq!(labels, vec![Some(0), Some(0), Some(0), Some(0), Some(0), None]);
    }

    /// Straightforward unweighted reference used as an oracle.
    fn reference(points: &[Vec<f64>], eps: f64, min_samples: usize) -> Vec<Option<usize>> {
        let n = points.len();
        let nb = |i: usize| -> Vec<usize> {
            (0..n)
                .filter(|&j| dist2(&points[i], &points[j]) <= eps * eps)
                .collect()
        };
        let mut labels = vec![None; n];
        let mut c = 0;
        for i in 0..n {
            if labels[i].is_some() || nb(i).len() < min_samples {
                continue;
            }
            labels[i] = Some(c);
            let mut queue = nb(i);
            let mut k = 0;
            while k < queue.len() {
                let q = queue[k];
                k += 1;
                if labels[q].is_none() {
                    labels[q] = Some(c);
                    let qn = nb(q);
                    if qn.len() >= min_samples {
                        queue.extend(qn);
                    }
                }
            }
            c += 1;
        }
        labels
    }

    /// Collapsing identical points into weights leaves the partition unchanged.
    fn same_partition(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
        a.len() == b.len()
            && (0..a.len()).all(|i| {
                (0..a.len()).all(|j| (a[i].is_some() && a[i] == a[j]) == (b[i].is_some() && b[i] == b[j]))
                    && a[i].is_none() == b[i].is_none()
            })
    }

    proptest! {
        #[test]
        fn weighted_matches_expanded_reference(
            raw in prop::collection::vec((0u8..40, 1usize..4), 1..30),
            min_samples in 1usize..6,
        ) {
            let unique: Vec<Vec<f64>> = raw.iter().map(|(x, _)| vec![*x as f64 / 100.0]).collect();
            let weights: Vec<f64> = raw.iter().map(|(_, w)| *w as f64).collect();
            let labels = dbscan(&unique, &weights, 0.03, min_samples as f64);

            let mut expanded = Vec::new();
            let mut owner = Vec::new();
            for (i, (x, w)) in raw.iter().enumerate() {
                for _ in 0..*w {
                    expanded.push(vec![*x as f64 / 100.0]);
                    owner.push(i);
                }
            }
            let reference_labels = reference(&expanded, 0.03, min_samples);
            let lifted: Vec<Option<usize>> = owner.iter().map(|&i| labels[i]).collect();
            // cores and noise agree exactly; border ties between clusters may differ
            for (k, &i) in owner.iter().enumerate() {
                prop_assert_eq!(labels[i].is_none(), reference_labels[k].is_none());
            }
            let all_core = (0..unique.len()).all(|i| {
                (0..unique.len())
                    .filter(|&j| dist2(&unique[i], &unique[j]) <= 0.03 * 0.03)
                    .map(|j| weights[j])
                    .sum::<f64>() >= min_samples as f64
            });
            if all_core {
                prop_assert!(same_partition(&lifted, &reference_labels));
            }
        }
    }
}
