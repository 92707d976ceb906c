//! C-SVM with a radial-basis kernel, trained by sequential minimal
//! optimisation with second-order working-set selection, plus Platt scaling
//! for calibrated probabilities.

use serde::{Deserialize, Serialize};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    /// Stopping tolerance on the maximal violating pair.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 10.0,
            gamma: 100.0,
            tol: 1e-3,
            max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    support: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    coef: Vec<f64>,
    rho: f64,
    gamma: f64,
    platt_a: f64,
    platt_b: f64,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

impl Svm {
    /// Train on `x` with labels `y` (true = positive). Both classes must be present.
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &SvmParams) -> Svm {
        Svm::fit_weighted(x, y, &vec![1.0; x.len()], params)
    }

    /// As [`Svm::fit`], with a per-sample multiplier on `C`.
    pub fn fit_weighted(x: &[Vec<f64>], y: &[bool], weights: &[f64], params: &SvmParams) -> Svm {
        let n = x.len();
        assert!(n == y.len() && n == weights.len());
        assert!(y.iter().any(|&v| v) && y.iter().any(|&v| !v), "both classes required");
        let ys: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { -1.0 }).collect();
        let cs: Vec<f64> = weights.iter().map(|w| w * params.c).collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rbf(params.gamma, &x[i], &x[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let q = |i: usize, j: usize| ys[i] * ys[j] * k[i * n + j];

        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let in_up = |a: f64, y: f64, c: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
        let in_low = |a: f64, y: f64, c: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

        for _ in 0..params.max_iter {
            // select i: maximal -y G over I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..n {
                if in_up(alpha[t], ys[t], cs[t]) && -ys[t] * grad[t] > gmax {
                    gmax = -ys[t] * grad[t];
                    i = t;
                }
            }
            if i == usize::MAX {
                break;
            }
            // select j by second-order gain over I_low
            let mut gmin = f64::INFINITY;
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..n {
                if !in_low(alpha[t], ys[t], cs[t]) {
                    continue;
                }
                let v = -ys[t] * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let a = k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t];
                    let a = if a > 0.0 { a } else { TAU };
                    let gain = -(b * b) / a;
                    if gain < best {
                        best = gain;
                        j = t;
                    }
                }
            }
            if gmax - gmin < params.tol || j == usize::MAX {
                break;
            }

            let (old_i, old_j) = (alpha[i], alpha[j]);
            let (ci, cj) = (cs[i], cs[j]);
            if ys[i] != ys[j] {
                let quad = (k[i * n + i] + k[j * n + j] + 2.0 * q(i, j)).max(TAU);
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > ci - cj {
                    if alpha[i] > ci {
                        alpha[i] = ci;
                        alpha[j] = ci - diff;
                    }
                } else if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = cj + diff;
                }
            } else {
                let quad = (k[i * n + i] + k[j * n + j] - 2.0 * q(i, j)).max(TAU);
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > ci {
                    if alpha[i] > ci {
                        alpha[i] = ci;
                        alpha[j] = sum - ci;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > cj {
                    if alpha[j] > cj {
                        alpha[j] = cj;
                        alpha[i] = sum - cj;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += q(t, i) * di + q(t, j) * dj;
            }
        }

        // offset from free vectors, or the midpoint of the feasible interval
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut free_sum) = (0usize, 0.0);
        for t in 0..n {
            let yg = ys[t] * grad[t];
            if alpha[t] >= cs[t] {
                if ys[t] < 0.0 {
                    ub = ub.min(yg)
                } else {
                    lb = lb.max(yg)
                }
            } else if alpha[t] <= 0.0 {
                if ys[t] > 0.0 {
                    ub = ub.min(yg)
                } else {
                    lb = lb.max(yg)
                }
            } else {
                free += 1;
                free_sum += yg;
            }
        }
        let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

        let mut support = Vec::new();
        let mut coef = Vec::new();
        for t in 0..n {
            if alpha[t] > 0.0 {
                support.push(x[t].clone());
                coef.push(alpha[t] * ys[t]);
            }
        }
        let mut svm = Svm {
            support,
            coef,
            rho,
            gamma: params.gamma,
            platt_a: -1.0,
            platt_b: 0.0,
        };
        let decisions: Vec<f64> = x.iter().map(|v| svm.decision(v)).collect();
        let (a, b) = platt_fit(&decisions, y);
        svm.platt_a = a;
        svm.platt_b = b;
        svm
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * rbf(self.gamma, s, x))
            .sum::<f64>()
            - self.rho
    }

    /// Calibrated probability of the positive class.
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid_prob(self.decision(x), self.platt_a, self.platt_b)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.probability(x) >= 0.5
    }

    pub fn support_count(&self) -> usize {
        self.support.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

fn sigmoid_prob(f: f64, a: f64, b: f64) -> f64 {
    let z = f * a + b;
    if z >= 0.0 {
        (-z).exp() / (1.0 + (-z).exp())
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Fit `P(y=1|f) = 1 / (1 + exp(A f + B))` by regularised maximum likelihood
/// with a Newton method and backtracking line search.
pub fn platt_fit(dec: &[f64], y: &[bool]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&v| v).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v { hi } else { lo }).collect();
    let (min_step, sigma, eps) = (1e-10, 1e-12, 1e-5);
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let objective = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = f * a + b;
                if z >= 0.0 {
                    ti * z + (1.0 + (-z).exp()).ln()
                } else {
                    (ti - 1.0) * z + (1.0 + z.exp()).ln()
                }
            })
            .sum()
    };
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                ((-z).exp() / (1.0 + (-z).exp()), 1.0 / (1.0 + (-z).exp()))
            } else {
                (1.0 / (1.0 + z.exp()), z.exp() / (1.0 + z.exp()))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    (a, b)
}
