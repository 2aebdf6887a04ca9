//! Dense complex matrices, Householder QR and least squares.

use num_complex::Complex64;

use crate::error::{QspError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative pivot size below which a system counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        CMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn col_norm_sqr_from(&self, j: usize, start: usize) -> f64 {
        (start..self.rows).map(|i| self.get(i, j).norm_sqr()).sum()
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

/// Householder reflector for `x`: returns `(v, beta, alpha)` with
/// `(I - beta v v^H) x = alpha e_1`.
fn householder(x: &[Complex64]) -> (Vec<Complex64>, f64, Complex64) {
    let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![ZERO; x.len()], 0.0, ZERO);
    }
    let phase = if x[0].norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        x[0] / x[0].norm()
    };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    (v, 2.0 / vnorm, alpha)
}

/// Applies `I - beta v v^H` to rows `k..` of columns `from..` of `a`.
fn apply_reflector(a: &mut CMatrix, v: &[Complex64], beta: f64, k: usize, from: usize) {
    if beta == 0.0 {
        return;
    }
    for j in from..a.cols {
        let s: Complex64 = v
            .iter()
            .enumerate()
            .map(|(t, vt)| vt.conj() * a.get(k + t, j))
            .sum();
        let s = s * beta;
        for (t, vt) in v.iter().enumerate() {
            a.add_to(k + t, j, -vt * s);
        }
    }
}

/// Upper-triangular factor `R` (n x n) of an m x n matrix with `m >= n`, unpivoted.
pub fn qr_r(a: &CMatrix) -> CMatrix {
    let mut w = a.clone();
    let n = w.cols.min(w.rows);
    for k in 0..n {
        let x: Vec<Complex64> = (k..w.rows).map(|i| w.get(i, k)).collect();
        let (v, beta, alpha) = householder(&x);
        apply_reflector(&mut w, &v, beta, k, k + 1);
        w.set(k, k, if beta == 0.0 { x[0] } else { alpha });
        for i in k + 1..w.rows {
            w.set(i, k, ZERO);
        }
    }
    CMatrix::from_fn(w.cols, w.cols, |i, j| {
        if i < w.rows && j >= i {
            w.get(i, j)
        } else {
            ZERO
        }
    })
}

/// Least-squares solution of `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    pub x: Vec<Complex64>,
    /// `||A x - b||_2`.
    pub residual: f64,
    /// `|R_nn| / |R_11|` after column pivoting.
    pub pivot_ratio: f64,
}

/// Solves `min ||A x - b||` by QR with column pivoting.
pub fn solve_linear(a: &CMatrix, b: &[Complex64]) -> Result<LstsqSolution> {
    let (m, n) = (a.rows, a.cols);
    if m < n {
        return Err(QspError::Argument(format!(
            "system has {m} rows but {n} unknowns"
        )));
    }
    if b.len() != m {
        return Err(QspError::Argument("right-hand side length mismatch".into()));
    }
    let mut w = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n).map(|j| w.col_norm_sqr_from(j, 0)).collect();
    let mut r00 = 0.0;
    let mut ratio = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| {
                norms[i]
                    .partial_cmp(&norms[j])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        w.swap_cols(k, p);
        perm.swap(k, p);
        norms.swap(k, p);
        let x: Vec<Complex64> = (k..m).map(|i| w.get(i, k)).collect();
        let (v, beta, alpha) = householder(&x);
        apply_reflector(&mut w, &v, beta, k, k + 1);
        if beta != 0.0 {
            let s: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt.conj() * rhs[k + t])
                .sum::<Complex64>()
                * beta;
            for (t, vt) in v.iter().enumerate() {
                rhs[k + t] -= vt * s;
            }
            w.set(k, k, alpha);
        }
        let diag = w.get(k, k).norm();
        if k == 0 {
            r00 = diag;
        }
        ratio = if r00 == 0.0 { 0.0 } else { diag / r00 };
        if ratio <= RANK_TOL {
            return Err(QspError::RankDeficient { ratio });
        }
        for j in k + 1..n {
            norms[j] = w.col_norm_sqr_from(j, k + 1);
        }
    }
    let mut y = vec![ZERO; n];
    for i in (0..n).rev() {
        let s: Complex64 = (i + 1..n).map(|j| w.get(i, j) * y[j]).sum();
        y[i] = (rhs[i] - s) / w.get(i, i);
    }
    let mut x = vec![ZERO; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    let ax = a.mul_vec(&x);
    let residual = ax
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(LstsqSolution {
        x,
        residual,
        pivot_ratio: ratio,
    })
}

/// Solves `R x = b` for upper-triangular `R`.
pub fn solve_upper(r: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = r.cols;
    let mut x = vec![ZERO; n];
    for i in (0..n).rev() {
        let s: Complex64 = (i + 1..n).map(|j| r.get(i, j) * x[j]).sum();
        x[i] = (b[i] - s) / r.get(i, i);
    }
    x
}

/// Solves `R^H x = b` for upper-triangular `R`.
pub fn solve_upper_adjoint(r: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = r.cols;
    let mut x = vec![ZERO; n];
    for i in 0..n {
        let s: Complex64 = (0..i).map(|j| r.get(j, i).conj() * x[j]).sum();
        x[i] = (b[i] - s) / r.get(i, i).conj();
    }
    x
}
