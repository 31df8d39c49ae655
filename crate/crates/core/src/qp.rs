//! Vote-weight fitting problems.
//!
//! The constrained fit is the convex QP
//!
//! ```text
//! min ½ wᵀHw + cᵀw + k   s.t.  w ≥ 0,  Σw = 1
//! ```
//!
//! solved with a primal active-set method. The working set holds the bounds
//! `w_i = 0` treated as equalities (the sum constraint is always active).
//! Each iteration minimizes the objective over the free variables restricted
//! to `Σp = 0`, steps until a bound blocks, and releases the bound with the
//! most negative multiplier once the subproblem is solved.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, solve_linear, sym_eig, Matrix};

#[derive(Debug, Clone)]
pub struct QpProblem {
    h: Matrix,
    c: Vec<f64>,
    constant: f64,
}

impl QpProblem {
    pub fn new(h: Matrix, c: Vec<f64>) -> Result<Self> {
        if !h.is_square() || h.rows() != c.len() {
            return Err(Error::Dimension(format!(
                "QP needs square H matching c: H is {}x{}, c has {}",
                h.rows(),
                h.cols(),
                c.len()
            )));
        }
        let tolerance = 1e-10 * h.frobenius_norm().max(1.0);
        let asymmetry = h.asymmetry();
        if asymmetry > tolerance {
            return Err(Error::NotSymmetric {
                asymmetry,
                tolerance,
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("QP linear term"));
        }
        Ok(Self {
            h,
            c,
            constant: 0.0,
        })
    }

    /// `½‖Lw − t‖²` written as `H = LᵀL`, `c = −Lᵀt`, `k = ½‖t‖²`.
    pub fn from_least_squares(l: &Matrix, target: &[f64]) -> Result<Self> {
        let lt_t = l.tr_matvec(target)?;
        let mut problem = Self::new(l.gram(), lt_t.iter().map(|v| -v).collect())?;
        problem.constant = 0.5 * dot(target, target);
        Ok(problem)
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let hw = self.h.matvec(w).expect("dimension checked by caller");
        0.5 * dot(w, &hw) + dot(&self.c, w) + self.constant
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = self.h.matvec(w).expect("dimension checked by caller");
        for (gi, ci) in g.iter_mut().zip(&self.c) {
            *gi += ci;
        }
        g
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub working_set: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub w: Vec<f64>,
    pub objective: f64,
    /// Variables held at their zero bound, ascending.
    pub active_set: Vec<usize>,
    /// Bound multipliers, aligned with `active_set`.
    pub multipliers: Vec<f64>,
    /// Multiplier of `Σw = 1`.
    pub equality_multiplier: f64,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

impl QpSolution {
    /// Writes the iteration trace as JSON lines.
    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        for entry in &self.trace {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct QpOptions {
    /// Defaults to `100·m`.
    pub max_iter: Option<usize>,
    pub trace: bool,
}

const FEASIBILITY_TOL: f64 = 1e-10;
const DROP_TOL: f64 = -1e-10;
const STEP_TOL: f64 = 1e-12;

pub fn uniform_start(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

pub fn solve_simplex_qp(problem: &QpProblem, w0: &[f64]) -> Result<QpSolution> {
    solve_simplex_qp_with(problem, w0, &QpOptions::default())
}

pub fn solve_simplex_qp_with(
    problem: &QpProblem,
    w0: &[f64],
    options: &QpOptions,
) -> Result<QpSolution> {
    let m = problem.dim();
    if w0.len() != m {
        return Err(Error::Dimension(format!(
            "start point has length {}, problem has {m} variables",
            w0.len()
        )));
    }
    if let Some((i, v)) = w0
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < -FEASIBILITY_TOL)
    {
        return Err(Error::Infeasible(format!("w0[{i}] = {v}")));
    }
    let sum: f64 = w0.iter().sum();
    if (sum - 1.0).abs() > FEASIBILITY_TOL {
        return Err(Error::Infeasible(format!("w0 sums to {sum}")));
    }

    let max_iter = options.max_iter.unwrap_or(100 * m);
    let eig_tol = 1e-11 * problem.h.frobenius_norm();
    let mut x: Vec<f64> = w0.iter().map(|v| v.max(0.0)).collect();
    let mut working: Vec<bool> = x.iter().map(|&v| v == 0.0).collect();
    let mut trace = Vec::new();
    let mut objective = problem.objective(&x);
    if options.trace {
        trace.push(TraceEntry {
            iteration: 0,
            objective,
            working_set: indices(&working),
        });
    }

    for iteration in 1..=max_iter {
        let g = problem.gradient(&x);
        let free: Vec<usize> = (0..m).filter(|&i| !working[i]).collect();
        let step = subproblem_step(problem, &g, &free, eig_tol)?;

        match step {
            Step::Stationary => {
                let nu = free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64;
                let mut release: Option<(usize, f64)> = None;
                for i in (0..m).filter(|&i| working[i]) {
                    let mu = g[i] - nu;
                    if mu < DROP_TOL && release.is_none_or(|(_, best)| mu < best) {
                        release = Some((i, mu));
                    }
                }
                match release {
                    Some((i, _)) => working[i] = false,
                    None => {
                        let active_set = indices(&working);
                        let multipliers = active_set.iter().map(|&i| g[i] - nu).collect();
                        if options.trace {
                            trace.push(TraceEntry {
                                iteration,
                                objective,
                                working_set: active_set.clone(),
                            });
                        }
                        return Ok(QpSolution {
                            w: x,
                            objective,
                            active_set,
                            multipliers,
                            equality_multiplier: nu,
                            iterations: iteration,
                            trace,
                        });
                    }
                }
            }
            Step::Move { direction, bounded } => {
                let mut alpha = if bounded { 1.0 } else { f64::INFINITY };
                let mut blocking = None;
                for &i in &free {
                    if direction[i] < 0.0 {
                        let ratio = x[i] / -direction[i];
                        // A full step that lands on a bound (up to round-off) still blocks.
                        let hits = if blocking.is_none() {
                            ratio <= alpha * (1.0 + 1e-12)
                        } else {
                            ratio < alpha
                        };
                        if hits {
                            alpha = ratio;
                            blocking = Some(i);
                        }
                    }
                }
                if !alpha.is_finite() {
                    // A zero-curvature direction always hits a bound on the simplex.
                    return Err(Error::QpConvergence {
                        iterations: iteration,
                        objective,
                        best: x,
                    });
                }
                for &i in &free {
                    x[i] = (x[i] + alpha * direction[i]).max(0.0);
                }
                if let Some(i) = blocking {
                    x[i] = 0.0;
                    working[i] = true;
                }
                objective = problem.objective(&x);
            }
        }
        if options.trace {
            trace.push(TraceEntry {
                iteration,
                objective,
                working_set: indices(&working),
            });
        }
    }
    Err(Error::QpConvergence {
        iterations: max_iter,
        objective,
        best: x,
    })
}

fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

enum Step {
    Stationary,
    /// `bounded`: a full step (α = 1) reaches the subproblem minimizer.
    Move { direction: Vec<f64>, bounded: bool },
}

/// Minimizes the objective over `x + p` with `p` supported on `free` and
/// `Σp = 0`. The projected Hessian `P H_FF P` (with `P = I − 11ᵀ/f`) is
/// pseudo-inverted; if the projected gradient has a component in its null
/// space the objective is linear along it and that descent ray is returned.
fn subproblem_step(problem: &QpProblem, g: &[f64], free: &[usize], eig_tol: f64) -> Result<Step> {
    let m = problem.dim();
    let f = free.len();
    if f <= 1 {
        return Ok(Step::Stationary);
    }
    let gf: Vec<f64> = free.iter().map(|&i| g[i]).collect();
    let mean = gf.iter().sum::<f64>() / f as f64;
    let gp: Vec<f64> = gf.iter().map(|v| v - mean).collect();

    let mut hff = Matrix::zeros(f, f);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            hff[(a, b)] = problem.h[(i, j)];
        }
    }
    let projected = project_both_sides(&hff);
    let spectrum = sym_eig(&projected, true)?;
    let q = spectrum.vectors.as_ref().expect("vectors requested");

    let mut newton = vec![0.0; f];
    let mut residual = gp.clone();
    for (k, &lambda) in spectrum.values.iter().enumerate() {
        if lambda <= eig_tol {
            continue;
        }
        let qk = q.column(k);
        let coef = dot(&qk, &gp);
        for a in 0..f {
            newton[a] -= coef / lambda * qk[a];
            residual[a] -= coef * qk[a];
        }
    }

    let scale = 1.0 + gf.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let (local, bounded) = if norm2(&residual) > 1e-10 * scale {
        (residual.iter().map(|v| -v).collect::<Vec<_>>(), false)
    } else {
        (newton, true)
    };
    if bounded && local.iter().all(|v| v.abs() <= STEP_TOL) {
        return Ok(Step::Stationary);
    }
    let mut direction = vec![0.0; m];
    for (a, &i) in free.iter().enumerate() {
        direction[i] = local[a];
    }
    Ok(Step::Move { direction, bounded })
}

fn project_both_sides(h: &Matrix) -> Matrix {
    let f = h.rows();
    let inv = 1.0 / f as f64;
    let row_means: Vec<f64> = h.iter_rows().map(|r| r.iter().sum::<f64>() * inv).collect();
    let total_mean = row_means.iter().sum::<f64>() * inv;
    let mut out = Matrix::zeros(f, f);
    for i in 0..f {
        for j in 0..f {
            // H symmetric: column means equal row means.
            out[(i, j)] = h[(i, j)] - row_means[i] - row_means[j] + total_mean;
        }
    }
    out
}

/// Least-squares weights from the normal equations `LᵀL w = Lᵀl*`.
pub fn solve_unconstrained(l: &Matrix, l_star: &[f64]) -> Result<Vec<f64>> {
    if l.rows() != l_star.len() {
        return Err(Error::Dimension(format!(
            "label matrix has {} rows, target has {}",
            l.rows(),
            l_star.len()
        )));
    }
    solve_linear(&l.gram(), &l.tr_matvec(l_star)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    /// Largest `|g_i − ν|` over variables off their bound.
    pub stationarity: f64,
    pub sum_violation: f64,
    pub min_component: f64,
    /// Smallest bound multiplier `g_i − ν` over variables at their bound.
    pub min_multiplier: f64,
    pub equality_multiplier: f64,
    pub pass: bool,
}

const KKT_TOL: f64 = 1e-8;
const AT_BOUND: f64 = 1e-10;

pub fn check_kkt(problem: &QpProblem, w: &[f64]) -> KktReport {
    if w.len() != problem.dim() {
        return KktReport {
            stationarity: f64::INFINITY,
            sum_violation: f64::INFINITY,
            min_component: f64::NEG_INFINITY,
            min_multiplier: f64::NEG_INFINITY,
            equality_multiplier: f64::NAN,
            pass: false,
        };
    }
    let g = problem.gradient(w);
    let free: Vec<usize> = (0..w.len()).filter(|&i| w[i] > AT_BOUND).collect();
    let nu = if free.is_empty() {
        g.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64
    };
    let stationarity = free.iter().fold(0.0f64, |acc, &i| acc.max((g[i] - nu).abs()));
    let min_multiplier = (0..w.len())
        .filter(|&i| w[i] <= AT_BOUND)
        .map(|i| g[i] - nu)
        .fold(f64::INFINITY, f64::min);
    let sum_violation = (w.iter().sum::<f64>() - 1.0).abs();
    let min_component = w.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = stationarity <= KKT_TOL
        && sum_violation <= KKT_TOL
        && min_component >= -KKT_TOL
        && min_multiplier >= -KKT_TOL;
    KktReport {
        stationarity,
        sum_violation,
        min_component,
        min_multiplier,
        equality_multiplier: nu,
        pass,
    }
}
