//! All roots of a complex polynomial by Aberth-Ehrlich simultaneous iteration.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::dd::compensated_horner;
use crate::error::{QspError, Result};

pub const MAX_ITER: usize = 500;
/// Backward-error level at which the root set is accepted.
pub const RESIDUAL_TOL: f64 = 1e-12;
const POLISH_SWEEPS: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Roots listed with multiplicity, and the largest backward error among them.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// `max_i |p(r_i)| / sum_k |a_k| |r_i|^k`.
    pub residual: f64,
    pub iterations: usize,
}

/// `(p(z), p'(z))` by Horner.
fn horner_with_derivative(a: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &c in a.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Newton correction `p(z)/p'(z)` and backward error at `z`, stable for any `|z|`.
fn newton_step(a: &[Complex64], abs_a: &[f64], z: Complex64) -> (Complex64, f64) {
    let n = a.len() - 1;
    if z.norm() <= 1.0 {
        let (p, dp) = horner_with_derivative(a, z);
        let r = z.norm();
        let scale = abs_a.iter().rev().fold(0.0, |s, &c| s * r + c);
        (p / dp, p.norm() / scale)
    } else {
        // p(z) = z^n q(y), y = 1/z, q reversed
        let y = z.inv();
        let mut q = ZERO;
        let mut dq = ZERO;
        for &c in a.iter() {
            dq = dq * y + q;
            q = q * y + c;
        }
        let r = y.norm();
        let scale = abs_a.iter().fold(0.0, |s, &c| s * r + c);
        let denom = q * n as f64 - y * dq;
        (z * q / denom, q.norm() / scale)
    }
}

/// Initial guesses on circles whose radii come from the upper convex hull of
/// `(k, log|a_k|)`.
fn initial_guesses(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len() - 1;
    let pts: Vec<(usize, f64)> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (k1, v1) = hull[hull.len() - 2];
            let (k2, v2) = hull[hull.len() - 1];
            let cross = (k2 as f64 - k1 as f64) * (p.1 - v1) - (v2 - v1) * (p.0 as f64 - k1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let ((i, vi), (j, vj)) = (w[0], w[1]);
        let m = j - i;
        let r = ((vi - vj) / m as f64).exp();
        let offset = 2.0 * PI * i as f64 / n as f64 + 0.7;
        out.extend(
            (0..m).map(|t| Complex64::from_polar(r, 2.0 * PI * t as f64 / m as f64 + offset)),
        );
    }
    out
}

/// Every root of `sum_k coeffs[k] z^k`.
///
/// Exactly-zero leading coefficients are dropped and exactly-zero trailing ones
/// become roots at the origin.
pub fn all_roots(coeffs: &[Complex64]) -> Result<RootSet> {
    if coeffs
        .iter()
        .any(|c| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(QspError::Argument(
            "polynomial has non-finite coefficients".into(),
        ));
    }
    let top = coeffs
        .iter()
        .rposition(|c| c.norm() > 0.0)
        .ok_or_else(|| QspError::Argument("zero polynomial has no finite root set".into()))?;
    if top == 0 {
        return Err(QspError::Argument(
            "constant polynomial has no roots".into(),
        ));
    }
    let low = coeffs.iter().position(|c| c.norm() > 0.0).unwrap_or(0);
    let mut roots = vec![ZERO; low];
    let a = &coeffs[low..=top];
    if a.len() == 1 {
        return Ok(RootSet {
            roots,
            residual: 0.0,
            iterations: 0,
        });
    }
    let abs_a: Vec<f64> = a.iter().map(|c| c.norm()).collect();
    let n = a.len() - 1;
    let mut z = initial_guesses(a);
    let mut done = vec![false; n];
    let mut iterations = 0;
    let eps = f64::EPSILON;
    while iterations < MAX_ITER && done.iter().any(|d| !d) {
        iterations += 1;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (ratio, berr) = newton_step(a, &abs_a, z[i]);
            if berr <= 4.0 * eps || !(ratio.re.is_finite() && ratio.im.is_finite()) {
                done[i] = true;
                continue;
            }
            let s: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                if step.norm() <= eps * z[i].norm() {
                    done[i] = true;
                }
            } else {
                done[i] = true;
            }
        }
    }
    let residual = polish(a, &abs_a, &mut z);
    if residual > RESIDUAL_TOL || residual.is_nan() {
        return Err(QspError::RootsNotConverged {
            iterations,
            residual,
        });
    }
    roots.extend(z);
    Ok(RootSet {
        roots,
        residual,
        iterations,
    })
}

/// Aberth sweeps with compensated evaluation of `p` (of the reversed polynomial
/// in `1/z` outside the unit disc); returns the new residual.
fn polish(a: &[Complex64], abs_a: &[f64], z: &mut [Complex64]) -> f64 {
    let rev: Vec<Complex64> = a.iter().rev().copied().collect();
    let one = Complex64::new(1.0, 0.0);
    for _ in 0..POLISH_SWEEPS {
        let mut moved = false;
        for i in 0..z.len() {
            let outside = z[i].norm() > 1.0;
            let (coeffs, x) = if outside {
                (&rev[..], z[i].inv())
            } else {
                (a, z[i])
            };
            let p = compensated_horner(coeffs, x);
            let (_, dp) = horner_with_derivative(coeffs, x);
            let ratio = p / dp;
            let s: Complex64 = (0..z.len())
                .filter(|&j| j != i)
                .map(|j| (x - if outside { z[j].inv() } else { z[j] }).inv())
                .sum();
            let step = ratio / (one - ratio * s);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            let next = x - step;
            if next.norm() == 0.0 && outside {
                continue;
            }
            z[i] = if outside { next.inv() } else { next };
            moved |= step.norm() > f64::EPSILON * next.norm();
        }
        if !moved {
            break;
        }
    }
    z.iter()
        .map(|&r| {
            if r.norm() > 1.0 {
                let y = r.inv();
                let scale = abs_a.iter().fold(0.0, |s, &c| s * y.norm() + c);
                return compensated_horner(&rev, y).norm() / scale;
            }
            let scale = abs_a.iter().rev().fold(0.0, |s, &c| s * r.norm() + c);
            compensated_horner(a, r).norm() / scale
        })
        .fold(0.0, f64::max)
}

/// Coefficients (ascending) of `lead * prod_i (z - r_i)`.
pub fn poly_from_roots(roots: &[Complex64], lead: Complex64) -> Vec<Complex64> {
    let mut c = vec![lead];
    for &r in roots {
        let mut next = vec![ZERO; c.len() + 1];
        for (k, &v) in c.iter().enumerate() {
            next[k + 1] += v;
            next[k] -= v * r;
        }
        c = next;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    }

    #[test]
    fn quadratic() {
        let r = all_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let s = sorted(r.roots);
        assert!((s[0] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((s[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn double_root_at_origin() {
        let r = all_roots(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.roots, vec![c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn squared_quadratic_for_cosine_target() {
        // w^2 (1 - ((w + 1/w)/2)^2) = -(w^2 - 1)^2 / 4
        let a = [
            c(-0.25, 0.0),
            c(0.0, 0.0),
            c(0.5, 0.0),
            c(0.0, 0.0),
            c(-0.25, 0.0),
        ];
        let r = all_roots(&a).unwrap();
        let s = sorted(r.roots);
        for (x, e) in s.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((x - c(e, 0.0)).norm() < 1e-7, "{x}");
        }
        for x in &s {
            let v: Complex64 = a
                .iter()
                .enumerate()
                .map(|(k, &ak)| ak * x.powi(k as i32))
                .sum();
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_constant_and_zero() {
        assert!(all_roots(&[c(1.0, 0.0)]).is_err());
        assert!(all_roots(&[c(0.0, 0.0), c(0.0, 0.0)]).is_err());
        assert!(all_roots(&[c(f64::NAN, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn widely_spread_magnitudes() {
        let roots = [
            c(1e-6, 0.0),
            c(0.5, 0.5),
            c(-2.0, 0.1),
            c(1e5, -3.0),
            c(0.0, 30.0),
        ];
        let a = poly_from_roots(&roots, c(1.0, 0.0));
        let r = all_roots(&a).unwrap();
        for t in roots {
            let best = r
                .roots
                .iter()
                .map(|x| (x - t).norm() / t.norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "{t}: {best}");
        }
    }

    #[test]
    fn unit_circle_roots_of_high_degree() {
        // z^200 - 1
        let mut a = vec![c(0.0, 0.0); 201];
        a[0] = c(-1.0, 0.0);
        a[200] = c(1.0, 0.0);
        let r = all_roots(&a).unwrap();
        assert_eq!(r.roots.len(), 200);
        assert!(r.roots.iter().all(|z| (z.norm() - 1.0).abs() < 1e-13));
        assert!(r.residual <= RESIDUAL_TOL);
    }

    proptest! {
        #[test]
        fn reconstruction_from_roots(roots in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..9)) {
            let roots: Vec<Complex64> = roots.into_iter().map(|(a, b)| c(a, b)).collect();
            let a = poly_from_roots(&roots, c(0.7, -0.3));
            let r = all_roots(&a).unwrap();
            prop_assert_eq!(r.roots.len(), roots.len());
            let back = poly_from_roots(&r.roots, c(0.7, -0.3));
            let norm = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
            for (x, y) in a.iter().zip(&back) {
                prop_assert!((x - y).norm() <= 1e-10 * norm);
            }
        }
    }
}
