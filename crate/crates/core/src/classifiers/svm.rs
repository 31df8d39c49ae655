//! Linear soft-margin SVM trained by SMO on the dual, with the maximal
//! violating pair working-set selection. More than two classes are handled
//! one-vs-one.

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};

#[derive(Debug, Clone, Copy)]
pub struct SvmOptions {
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_iter: 1_000_000,
        }
    }
}

/// `f(x) = w·x + b`; positive decisions select the positive class.
#[derive(Debug, Clone)]
pub struct BinarySvm {
    pub w: Vec<f64>,
    pub b: f64,
    pub alpha: Vec<f64>,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    /// Geometric margin `1/‖w‖`.
    pub fn margin(&self) -> f64 {
        1.0 / dot(&self.w, &self.w).sqrt()
    }

    /// Dual objective `Σα − ½‖w‖²`.
    pub fn dual_objective(&self) -> f64 {
        self.alpha.iter().sum::<f64>() - 0.5 * dot(&self.w, &self.w)
    }

    /// Trains on `x` with labels `y ∈ {+1, −1}`.
    pub fn train(x: &Matrix, y: &[f64], options: &SvmOptions) -> Result<BinarySvm> {
        let n = x.rows();
        if n != y.len() {
            return Err(Error::Dimension(format!("{n} samples, {} labels", y.len())));
        }
        if !(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0)) {
            return Err(Error::DegenerateData(
                "binary SVM needs both classes".into(),
            ));
        }
        if !(options.c > 0.0 && options.c.is_finite()) {
            return Err(Error::Parameter(format!("C must be positive, got {}", options.c)));
        }
        let gram: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| dot(x.row(i), x.row(j))).collect())
            .collect();
        let c = options.c;
        let mut alpha = vec![0.0; n];
        // Gradient of ½αᵀQα − Σα with Q_ij = y_i y_j K_ij.
        let mut grad = vec![-1.0; n];
        let mut iterations = 0;

        loop {
            let mut i = usize::MAX;
            let mut gmax = f64::NEG_INFINITY;
            let mut j = usize::MAX;
            let mut gmin = f64::INFINITY;
            for t in 0..n {
                let v = -y[t] * grad[t];
                let up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
                let low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
                if up && v > gmax {
                    gmax = v;
                    i = t;
                }
                if low && v < gmin {
                    gmin = v;
                    j = t;
                }
            }
            if i == usize::MAX || j == usize::MAX || gmax - gmin < options.tol {
                break;
            }
            if iterations == options.max_iter {
                return Err(Error::SvmConvergence(options.max_iter));
            }
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            let qij = y[i] * y[j] * gram[i][j];
            if y[i] != y[j] {
                let quad = positive(gram[i][i] + gram[j][j] + 2.0 * qij);
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
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let quad = positive(gram[i][i] + gram[j][j] - 2.0 * qij);
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += y[t] * (y[i] * gram[t][i] * di + y[j] * gram[t][j] * dj);
            }
        }

        let b = -offset(&alpha, &grad, y, c);
        let mut w = vec![0.0; x.cols()];
        for (t, row) in x.iter_rows().enumerate() {
            let coef = alpha[t] * y[t];
            if coef != 0.0 {
                for (wk, xk) in w.iter_mut().zip(row) {
                    *wk += coef * xk;
                }
            }
        }
        Ok(BinarySvm {
            w,
            b,
            alpha,
            iterations,
        })
    }
}

fn positive(quad: f64) -> f64 {
    if quad > 0.0 { quad } else { 1e-12 }
}

/// Threshold `ρ` with `f(x) = Σ α_t y_t K(x_t, x) − ρ`: averaged over free
/// vectors, or the midpoint of the feasible interval when none are free.
fn offset(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut free_sum = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (upper + lower)
    }
}

#[derive(Debug, Clone)]
pub struct SvmModel {
    n_classes: usize,
    /// `(positive class, negative class, machine)` for every pair.
    machines: Vec<(usize, usize, BinarySvm)>,
}

pub fn svm_train(data: &LabeledDataset, options: &SvmOptions) -> Result<SvmModel> {
    let classes = data.classes_present();
    if classes.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "SVM needs at least two classes, found {}",
            classes.len()
        )));
    }
    let mut machines = Vec::new();
    for (ai, &a) in classes.iter().enumerate() {
        for &b in &classes[ai + 1..] {
            let rows: Vec<usize> = (0..data.n_samples())
                .filter(|&r| data.labels()[r] == a || data.labels()[r] == b)
                .collect();
            let x = data.features().select_rows(&rows)?;
            let y: Vec<f64> = rows
                .iter()
                .map(|&r| if data.labels()[r] == a { 1.0 } else { -1.0 })
                .collect();
            machines.push((a, b, BinarySvm::train(&x, &y, options)?));
        }
    }
    Ok(SvmModel {
        n_classes: data.n_classes(),
        machines,
    })
}

impl SvmModel {
    pub fn machines(&self) -> impl Iterator<Item = (usize, usize, &BinarySvm)> {
        self.machines.iter().map(|(a, b, m)| (*a, *b, m))
    }

    /// One-vs-one vote; ties go to the larger summed winning margin, then
    /// to the lower class code.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        let mut confidence = vec![0.0f64; self.n_classes];
        for (a, b, m) in &self.machines {
            let f = m.decision(x);
            let winner = if f >= 0.0 { *a } else { *b };
            votes[winner] += 1;
            confidence[winner] += f.abs();
        }
        (0..self.n_classes)
            .min_by(|&p, &q| {
                votes[q]
                    .cmp(&votes[p])
                    .then(confidence[q].total_cmp(&confidence[p]))
                    .then(p.cmp(&q))
            })
            .expect("at least two classes")
    }
}
