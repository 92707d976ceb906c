//! Product-Gaussian kernel density estimates on the unit box.
//!
//! Every kernel is truncated to `[0, 1]^d` and renormalised, so the estimate
//! integrates to one over the box and grid cell masses are exact.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    centers: Vec<Vec<f64>>,
    /// Normalised kernel weights.
    weights: Vec<f64>,
    bandwidth: Vec<f64>,
    /// Truncation mass of each kernel per dimension.
    norm: Vec<Vec<f64>>,
}

/// Scott's rule for one dimension of a `d`-dimensional sample of size `n`.
pub fn scott_bandwidth(std: f64, n: f64, d: usize) -> f64 {
    std * n.powf(-1.0 / (d as f64 + 4.0))
}

fn phi_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

impl Kde {
    /// Fit on distinct points with integer multiplicities `counts`.
    /// Each bandwidth is Scott's rule, floored at `min_bandwidth`.
    pub fn fit(points: &[Vec<f64>], counts: &[f64], min_bandwidth: f64) -> Kde {
        assert!(!points.is_empty() && points.len() == counts.len());
        let d = points[0].len();
        let total: f64 = counts.iter().sum();
        let weights: Vec<f64> = counts.iter().map(|c| c / total).collect();
        let bandwidth: Vec<f64> = (0..d)
            .map(|j| {
                let mean: f64 = points.iter().zip(&weights).map(|(p, w)| w * p[j]).sum();
                let var: f64 = points.iter().zip(&weights).map(|(p, w)| w * (p[j] - mean).powi(2)).sum();
                let var = if total > 1.0 { var * total / (total - 1.0) } else { 0.0 };
                scott_bandwidth(var.sqrt(), total, d).max(min_bandwidth)
            })
            .collect();
        let centers: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().map(|v| v.clamp(0.0, 1.0)).collect())
            .collect();
        let norm = centers
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&bandwidth)
                    .map(|(&m, &h)| phi_cdf((1.0 - m) / h) - phi_cdf(-m / h))
                    .collect()
            })
            .collect();
        Kde {
            centers,
            weights,
            bandwidth,
            norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.bandwidth.len()
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.centers.iter().zip(&self.weights).map(|(c, w)| w * c[j]).sum())
            .collect()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return 0.0;
        }
        let mut total = 0.0;
        for ((c, w), z) in self.centers.iter().zip(&self.weights).zip(&self.norm) {
            let mut k = *w;
            for j in 0..x.len() {
                let h = self.bandwidth[j];
                let u = (x[j] - c[j]) / h;
                k *= (-0.5 * u * u).exp() / (h * (2.0 * std::f64::consts::PI).sqrt() * z[j]);
            }
            total += k;
        }
        total
    }

    /// Probability mass of the axis-aligned box `[lo, hi]`.
    pub fn box_mass(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((c, w), z) in self.centers.iter().zip(&self.weights).zip(&self.norm) {
            let mut m = *w;
            for j in 0..lo.len() {
                let h = self.bandwidth[j];
                let a = lo[j].clamp(0.0, 1.0);
                let b = hi[j].clamp(0.0, 1.0);
                if b <= a {
                    m = 0.0;
                    break;
                }
                m *= (phi_cdf((b - c[j]) / h) - phi_cdf((a - c[j]) / h)) / z[j];
            }
            total += m;
        }
        total
    }

    /// Mass of each cell of a regular grid with `cells` divisions per
    /// dimension, in row-major order (last dimension fastest).
    pub fn grid_masses(&self, cells: usize) -> Vec<f64> {
        let d = self.dim();
        let total_cells = cells.pow(d as u32);
        let mut out = vec![0.0; total_cells];
        let edges: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        let mut per_dim = vec![vec![0.0; cells]; d];
        for ((c, w), z) in self.centers.iter().zip(&self.weights).zip(&self.norm) {
            for j in 0..d {
                let h = self.bandwidth[j];
                let mut prev = phi_cdf((edges[0] - c[j]) / h);
                for i in 0..cells {
                    let next = phi_cdf((edges[i + 1] - c[j]) / h);
                    per_dim[j][i] = (next - prev) / z[j];
                    prev = next;
                }
            }
            for (idx, slot) in out.iter_mut().enumerate() {
                let mut m = *w;
                let mut rest = idx;
                for j in (0..d).rev() {
                    m *= per_dim[j][rest % cells];
                    rest /= cells;
                }
                *slot += m;
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = self.centers.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        self.centers[pick]
            .iter()
            .zip(&self.bandwidth)
            .map(|(&m, &h)| {
                let normal = Normal::new(m, h).expect("positive bandwidth");
                loop {
                    let v = normal.sample(rng);
                    if (0.0..=1.0).contains(&v) {
                        break v;
                    }
                }
            })
            .collect()
    }
}

/// Cells per dimension used when comparing densities of dimension `d`,
/// keeping the grid at no more than `cells^3` points.
pub fn grid_cells(cells: usize, d: usize) -> usize {
    if d <= 3 {
        cells
    } else {
        let budget = (cells.pow(3)) as f64;
        (budget.powf(1.0 / d as f64).floor() as usize).max(2)
    }
}

/// L1 distance between two densities, evaluated as cell masses on a grid.
pub fn grid_l1(a: &Kde, b: &Kde, cells: usize) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let cells = grid_cells(cells, a.dim());
    a.grid_masses(cells)
        .iter()
        .zip(b.grid_masses(cells))
        .map(|(x, y)| (x - y).abs())
        .sum()
}
