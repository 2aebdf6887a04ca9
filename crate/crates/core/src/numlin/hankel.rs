//! Smallest right singular vector of the Prony Hankel matrix.

use num_complex::Complex64;

use super::linsolve::{qr_r, solve_upper, solve_upper_adjoint, CMatrix};
use crate::error::{QspError, Result};

/// `sigma_min / sigma_2` above which the null space counts as ambiguous.
pub const AMBIGUITY_RATIO: f64 = 0.5;

const INVERSE_ITERATIONS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct NullVector {
    /// Unit-norm vector minimizing `||H m||`.
    pub m: Vec<Complex64>,
    pub sigma_min: f64,
    /// `sigma_min / sigma_2`; 0 for a single column.
    pub ratio: f64,
    /// `||H m|| / ||H||_F`.
    pub residual: f64,
    pub rows: usize,
}

impl NullVector {
    pub fn is_ambiguous(&self) -> bool {
        self.ratio > AMBIGUITY_RATIO
    }
}

/// `H[i][j] = hneg[i + j]` where `hneg[k]` holds `h_hat_{-(k+1)}`.
pub fn hankel_matrix(hneg: &[Complex64], rows: usize, cols: usize) -> Result<CMatrix> {
    if hneg.len() + 1 < rows + cols {
        return Err(QspError::Argument(format!(
            "{rows}x{cols} Hankel matrix needs {} coefficients, got {}",
            rows + cols - 1,
            hneg.len()
        )));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| hneg[i + j]))
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|c| *c /= n);
    }
    n
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Null vector of a `rows x cols` Hankel matrix built from `hneg`.
pub fn hankel_null_vector(hneg: &[Complex64], rows: usize, cols: usize) -> Result<NullVector> {
    if cols == 0 || rows < cols {
        return Err(QspError::Argument(format!(
            "need rows >= cols >= 1, got {rows}x{cols}"
        )));
    }
    let h = hankel_matrix(hneg, rows, cols)?;
    let hnorm = h.norm();
    if hnorm == 0.0 {
        return Err(QspError::DegenerateNullSpace(
            "Hankel matrix is identically zero".into(),
        ));
    }
    if cols == 1 {
        return Ok(NullVector {
            m: vec![Complex64::new(1.0, 0.0)],
            sigma_min: hnorm,
            ratio: 0.0,
            residual: 1.0,
            rows,
        });
    }
    let mut r = qr_r(&h);
    // keep the triangular solves finite when R is exactly singular
    let floor = f64::EPSILON * hnorm;
    for i in 0..cols {
        if r.get(i, i).norm() < floor {
            r.set(i, i, Complex64::new(floor, 0.0));
        }
    }
    let mut v1: Vec<Complex64> = (0..cols)
        .map(|i| Complex64::new(1.0, 0.1 * i as f64))
        .collect();
    let mut v2: Vec<Complex64> = (0..cols)
        .map(|i| Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.3))
        .collect();
    normalize(&mut v1);
    normalize(&mut v2);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for _ in 0..INVERSE_ITERATIONS {
        let a1 = solve_upper(&r, &solve_upper_adjoint(&r, &v1));
        let a2 = solve_upper(&r, &solve_upper_adjoint(&r, &v2));
        // orthonormal basis of span{a1, a2}, then Rayleigh-Ritz on (R^H R)^{-1}
        let mut q1 = a1;
        normalize(&mut q1);
        let proj = dot(&q1, &a2);
        let mut q2: Vec<Complex64> = a2.iter().zip(&q1).map(|(x, y)| x - proj * y).collect();
        if normalize(&mut q2) == 0.0 {
            q2 = v2.clone();
            let p = dot(&q1, &q2);
            q2.iter_mut().zip(&q1).for_each(|(x, y)| *x -= p * y);
            normalize(&mut q2);
        }
        let rq1 = r.mul_vec(&q1);
        let rq2 = r.mul_vec(&q2);
        let g11 = dot(&rq1, &rq1).re;
        let g22 = dot(&rq2, &rq2).re;
        let g12 = dot(&rq1, &rq2);
        // eigenpairs of the 2x2 Hermitian Gram matrix, small one via det / lmax
        let tr = g11 + g22;
        let disc = ((g11 - g22) * (g11 - g22) / 4.0 + g12.norm_sqr()).sqrt();
        let lmax = tr / 2.0 + disc;
        let det = (g11 * g22 - g12.norm_sqr()).max(0.0);
        let lmin = if lmax > 0.0 { det / lmax } else { 0.0 };
        let (c1, c2) = if g12.norm() == 0.0 {
            if g11 <= g22 {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
            }
        } else if g22 >= g11 {
            (Complex64::new(g22 - lmin, 0.0), -g12.conj())
        } else {
            (-g12, Complex64::new(g11 - lmin, 0.0))
        };
        let mut nv1: Vec<Complex64> = q1.iter().zip(&q2).map(|(a, b)| c1 * a + c2 * b).collect();
        normalize(&mut nv1);
        let p = dot(&nv1, &q1);
        let mut nv2: Vec<Complex64> = q1.iter().zip(&nv1).map(|(a, b)| a - p * b).collect();
        if normalize(&mut nv2) == 0.0 {
            nv2 = q2.clone();
        }
        let converged = (lmin.sqrt() - s1).abs() <= 1e-15 * hnorm
            && (lmax.sqrt() - s2).abs() <= 1e-6 * lmax.sqrt();
        v1 = nv1;
        v2 = nv2;
        s1 = lmin.sqrt();
        s2 = lmax.sqrt();
        if converged {
            break;
        }
    }
    let hm = h.mul_vec(&v1);
    let res = hm.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    Ok(NullVector {
        m: v1,
        sigma_min: res,
        ratio: if s2 > 0.0 { res / s2 } else { 1.0 },
        residual: res / hnorm,
        rows,
    })
}

/// Null vector with `cols + 1` rows, retried with `2 cols` rows when the
/// ambiguity diagnostic fires and enough coefficients are available.
pub fn prony_null_vector(hneg: &[Complex64], cols: usize) -> Result<NullVector> {
    let first = hankel_null_vector(hneg, cols + 1, cols)?;
    if first.is_ambiguous() && hneg.len() + 1 >= 3 * cols {
        hankel_null_vector(hneg, 2 * cols, cols)
    } else {
        Ok(first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let z = vec![c(0.0, 0.0); 10];
        assert!(matches!(
            hankel_null_vector(&z, 4, 3),
            Err(QspError::DegenerateNullSpace(_))
        ));
    }

    #[test]
    fn single_column() {
        let v = hankel_null_vector(&[c(2.0, 0.0), c(1.0, 0.0)], 2, 1).unwrap();
        assert_eq!(v.m, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn recovers_characteristic_polynomial_of_exponential_sum() {
        // h_k = sum_j c_j xi_j^k obeys the recurrence with char poly prod (z - xi_j)
        let xi = [c(0.5, 0.2), c(-0.3, 0.0), c(0.1, -0.6)];
        let cs = [c(1.0, 0.0), c(0.5, 0.5), c(-2.0, 1.0)];
        let hneg: Vec<Complex64> = (0..12)
            .map(|k| xi.iter().zip(&cs).map(|(x, cc)| cc * x.powi(k)).sum())
            .collect();
        let v = hankel_null_vector(&hneg, 5, 4).unwrap();
        let lead = v.m[3];
        let m: Vec<Complex64> = v.m.iter().map(|x| x / lead).collect();
        let expect = crate::numlin::roots::poly_from_roots(&xi, c(1.0, 0.0));
        for (a, b) in m.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
        assert!(v.residual < 1e-14);
        assert!(v.ratio < 1e-10);
    }

    #[test]
    fn random_instance_residual() {
        let hneg: Vec<Complex64> = (0..20)
            .map(|k| c((k as f64 * 1.3).sin(), (k as f64 * 0.7).cos()))
            .collect();
        let v = hankel_null_vector(&hneg, 12, 9).unwrap();
        let h = hankel_matrix(&hneg, 12, 9).unwrap();
        // compare against the smallest singular value bound from the Gram eigen-decomposition
        let hm = h.mul_vec(&v.m);
        let res = hm.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((res - v.sigma_min).abs() <= 1e-12 * h.norm());
        assert!((v.m.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
