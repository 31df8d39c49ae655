//! Dense real-matrix primitives: a row-major [`Matrix`], a cyclic Jacobi
//! eigensolver for symmetric input and a partial-pivot LU linear solve.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix of finite reals with at least one row and column.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(rows.len(), cols, data)
    }

    /// # Panics
    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(self.iter_rows().map(|r| dot(r, x)).collect())
    }

    /// Computes `Aᵀx`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::Dimension(format!(
                "transpose of {}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &xi) in self.iter_rows().zip(x) {
            for (o, &a) in out.iter_mut().zip(r) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    /// Computes `AᵀA`.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for r in self.iter_rows() {
            for i in 0..n {
                let ri = r[i];
                if ri == 0.0 {
                    continue;
                }
                for (g_ij, r_j) in g.data[i * n + i..(i + 1) * n].iter_mut().zip(&r[i..]) {
                    *g_ij += ri * r_j;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest `|a_ij - a_ji|`; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Selects the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Matrix> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::Dimension(format!(
                "column {bad} out of range for {} columns",
                self.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in self.iter_rows() {
            data.extend(cols.iter().map(|&c| r[c]));
        }
        Matrix::new(self.rows, cols.len(), data)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Matrix> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::Dimension(format!(
                "row {bad} out of range for {} rows",
                self.rows
            )));
        }
        let mut data = Vec::with_capacity(self.cols * rows.len());
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix::new(rows.len(), self.cols, data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in self.iter_rows() {
            writeln!(f, "  {r:?}")?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenvalues (descending) and optionally the matching orthonormal
/// eigenvectors, stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    pub values: Vec<f64>,
    pub vectors: Option<Matrix>,
}

impl SymmetricSpectrum {
    /// Rebuilds `V diag(λ) Vᵀ`; `None` when vectors were not requested.
    pub fn reconstruct(&self) -> Option<Matrix> {
        let v = self.vectors.as_ref()?;
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| v[(i, k)] * self.values[k] * v[(j, k)]).sum();
            }
        }
        Some(out)
    }
}

const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input must be square and symmetric to within `1e-10·‖A‖_F`; it is
/// symmetrized before rotating. Sweeps continue until the off-diagonal
/// Frobenius norm falls below `1e-12·‖A‖_F`.
pub fn sym_eig(a: &Matrix, need_vectors: bool) -> Result<SymmetricSpectrum> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let norm = a.frobenius_norm();
    let tolerance = SYMMETRY_TOL * norm.max(f64::MIN_POSITIVE);
    let asymmetry = a.asymmetry();
    if asymmetry > tolerance {
        return Err(Error::NotSymmetric {
            asymmetry,
            tolerance,
        });
    }

    let mut m = a.clone();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = need_vectors.then(|| Matrix::identity(n));

    let target = JACOBI_TOL * norm;
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= target || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, v.as_mut(), p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.map(|v| {
        let mut sorted = Matrix::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                sorted[(r, new_col)] = v[(r, old_col)];
            }
        }
        sorted
    });
    Ok(SymmetricSpectrum { values, vectors })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * m[(i, j)] * m[(i, j)];
        }
    }
    s.sqrt()
}

/// Annihilates `m[p][q]` with one Givens rotation applied from both sides.
fn rotate(m: &mut Matrix, v: Option<&mut Matrix>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = m.rows();
    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        m[(r, p)] = new_rp;
        m[(p, r)] = new_rp;
        m[(r, q)] = new_rq;
        m[(q, r)] = new_rq;
    }
    if let Some(v) = v {
        for r in 0..n {
            let vrp = v[(r, p)];
            let vrq = v[(r, q)];
            v[(r, p)] = c * vrp - s * vrq;
            v[(r, q)] = s * vrp + c * vrq;
        }
    }
}

const PIVOT_TOL: f64 = 1e-12;

/// Solves `Ax = b` by LU factorization with partial pivoting.
///
/// A pivot smaller than `1e-12·‖A‖_F` is reported as [`Error::Singular`].
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "linear solve needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has length {}, expected {n}",
            b.len()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let threshold = PIVOT_TOL * a.frobenius_norm();
    let mut lu = a.clone();
    let mut x = b.to_vec();

    for k in 0..n {
        let (pivot_row, pivot) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot <= threshold || pivot == 0.0 {
            return Err(Error::Singular { pivot, threshold });
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            x.swap(k, pivot_row);
        }
        let diag = lu[(k, k)];
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / diag;
            if factor == 0.0 {
                continue;
            }
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                lu[(i, j)] -= factor * lu[(k, j)];
            }
            x[i] -= factor * x[k];
        }
    }
    for k in (0..n).rev() {
        let tail: f64 = ((k + 1)..n).map(|j| lu[(k, j)] * x[j]).sum();
        x[k] = (x[k] - tail) / lu[(k, k)];
    }
    Ok(x)
}
