//! Implementation error, query accounting and unitarity checks.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QspError, Result};
use crate::numlin::fourier::{coefficient, fourier_coeffs, inverse_fourier};
use crate::qspmodel::{AngleSequence, Convention};

/// Smallest grid used by [`sup_error`].
pub const MIN_GRID: usize = 4096;
/// Relative change below which a refined grid counts as stable.
pub const GRID_STABILITY: f64 = 0.01;
const MAX_REFINEMENTS: usize = 3;

/// `sum_s alpha_s weight_s implemented_s(theta)`.
pub fn recombined_at(seqs: &[AngleSequence], theta: f64) -> Result<Complex64> {
    seqs.iter().map(|s| s.contribution_at(theta)).sum()
}

/// Laurent coefficients of the recombined realization on `[-m/2, m/2)`.
fn realization_coeffs(seqs: &[AngleSequence]) -> Result<Vec<Complex64>> {
    let d = seqs.iter().map(AngleSequence::degree).max().unwrap_or(0);
    let m = (2 * d + 2).next_power_of_two().max(8);
    let samples = (0..m)
        .into_par_iter()
        .map(|j| recombined_at(seqs, 2.0 * PI * j as f64 / m as f64))
        .collect::<Result<Vec<_>>>()?;
    fourier_coeffs(&samples)
}

fn grid_error(coeffs: &[Complex64], tau: f64, n: usize) -> f64 {
    let half = coeffs.len() as i64 / 2;
    let mut padded = vec![Complex64::new(0.0, 0.0); n];
    for k in -half..half {
        padded[k.rem_euclid(n as i64) as usize] = coefficient(coeffs, k);
    }
    inverse_fourier(&padded)
        .par_iter()
        .enumerate()
        .map(|(j, v)| {
            let theta = 2.0 * PI * j as f64 / n as f64;
            (v - Complex64::from_polar(1.0, -tau * theta.cos())).norm()
        })
        .reduce(|| 0.0, f64::max)
}

/// `max_theta |sum_s alpha_s weight_s implemented_s(theta) - e^{-i tau cos theta}|`.
///
/// Sequences carry their scale, so with the benchmark normalization this is
/// twice the deviation of the half-scaled realization from `f / 2`. The
/// realization is sampled exactly at `2d + 2` or more points and interpolated
/// by FFT onto a grid of at least `max(4096, 64 (d + 1))` points, refined
/// fourfold until the maximum moves by less than 1%.
pub fn sup_error(seqs: &[AngleSequence], tau: f64) -> Result<f64> {
    let d = seqs.iter().map(AngleSequence::degree).max().unwrap_or(0);
    let coeffs = realization_coeffs(seqs)?;
    let mut n = MIN_GRID
        .max(crate::target::sup_samples(d))
        .next_power_of_two();
    let mut eps = grid_error(&coeffs, tau, n);
    for _ in 0..MAX_REFINEMENTS {
        n *= 4;
        let finer = grid_error(&coeffs, tau, n);
        let stable = (finer - eps).abs() <= GRID_STABILITY * finer;
        eps = finer;
        if stable {
            break;
        }
    }
    Ok(eps)
}

/// [`sup_error`] by direct evaluation at `n` equispaced angles.
pub fn sampled_error(seqs: &[AngleSequence], tau: f64, n: usize) -> Result<f64> {
    (0..n)
        .into_par_iter()
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n as f64;
            let exact = Complex64::from_polar(1.0, -tau * theta.cos());
            Ok((recombined_at(seqs, theta)? - exact).norm())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Worst `max |(U^dagger U - I)_ij|` over a grid of signal values.
pub fn unitarity_residual(seqs: &[AngleSequence]) -> Result<f64> {
    seqs.iter().try_fold(0.0f64, |acc, s| {
        let n = crate::target::sup_samples(s.degree());
        (0..n).try_fold(acc, |m, j| {
            let u = s.eval(s.point_at(2.0 * PI * (j as f64 + 0.5) / n as f64))?;
            Ok(m.max(u.unitarity_residual()))
        })
    })
}

/// Angle-finding families distinguished by the query accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryClass {
    OrdinaryRootfind,
    OrdinaryProny,
    OrdinaryOptimization,
    GqspRootfind,
    GqspProny,
    GqspOptimization,
}

impl QueryClass {
    pub const ALL: [QueryClass; 6] = [
        QueryClass::OrdinaryRootfind,
        QueryClass::OrdinaryProny,
        QueryClass::OrdinaryOptimization,
        QueryClass::GqspRootfind,
        QueryClass::GqspProny,
        QueryClass::GqspOptimization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryClass::OrdinaryRootfind => "ordinary-rf",
            QueryClass::OrdinaryProny => "ordinary-prony",
            QueryClass::OrdinaryOptimization => "ordinary-opt",
            QueryClass::GqspRootfind => "gqsp-rf",
            QueryClass::GqspProny => "gqsp-prony",
            QueryClass::GqspOptimization => "gqsp-opt",
        }
    }
}

impl fmt::Display for QueryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryClass {
    type Err = QspError;

    fn from_str(s: &str) -> Result<Self> {
        QueryClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| QspError::Argument(format!("unknown method class '{s}'")))
    }
}

/// Calls to the controlled signal operator (or its inverse) at truncation order `d`.
pub fn query_count(class: QueryClass, d: usize) -> Result<usize> {
    if d < 2 || d % 2 == 1 {
        return Err(QspError::Argument(format!(
            "query counts need even d >= 2, got {d}"
        )));
    }
    Ok(match class {
        QueryClass::OrdinaryRootfind => 4 * d - 2,
        QueryClass::OrdinaryProny | QueryClass::OrdinaryOptimization => 8 * d - 4,
        QueryClass::GqspRootfind | QueryClass::GqspOptimization => 2 * d,
        QueryClass::GqspProny => 4 * d,
    })
}

/// Queries spent by a concrete set of sequences: an ordinary sequence of
/// degree `k` needs `U` and `U^dagger` for its real part (`2k`), a GQSP
/// sequence needs `k`.
pub fn emitted_queries(seqs: &[AngleSequence]) -> usize {
    seqs.iter()
        .map(|s| match s.convention {
            Convention::Gqsp => s.degree(),
            _ => 2 * s.degree(),
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_formulas() {
        assert_eq!(query_count(QueryClass::OrdinaryRootfind, 34).unwrap(), 134);
        assert_eq!(query_count(QueryClass::GqspProny, 34).unwrap(), 136);
        assert_eq!(query_count(QueryClass::GqspRootfind, 34).unwrap(), 68);
        assert_eq!(query_count(QueryClass::OrdinaryProny, 34).unwrap(), 268);
        assert!(query_count(QueryClass::GqspRootfind, 3).is_err());
        assert!("gqsp-x".parse::<QueryClass>().is_err());
        for c in QueryClass::ALL {
            assert_eq!(c.as_str().parse::<QueryClass>().unwrap(), c);
        }
    }

    #[test]
    fn gqsp_counts_are_smaller() {
        for d in (2..200).step_by(2) {
            let q = |c| query_count(c, d).unwrap();
            assert!(q(QueryClass::GqspRootfind) < q(QueryClass::OrdinaryRootfind));
            assert!(q(QueryClass::GqspProny) < q(QueryClass::OrdinaryProny));
        }
    }

    #[test]
    fn constant_target_at_zero_tau() {
        // S_z(0) implements the constant 1, which is exactly e^{-i 0 x}
        let seq = AngleSequence::ordinary(Convention::WxSz, vec![0.0]).unwrap();
        assert!(sup_error(std::slice::from_ref(&seq), 0.0).unwrap() < 1e-15);
        let half = seq.with_scale(0.5, Complex64::new(1.0, 0.0));
        assert!((sup_error(&[half], 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(sup_error(&[], 0.0).unwrap(), 1.0);
    }

    #[test]
    fn interpolated_grid_matches_direct_evaluation() {
        let s = AngleSequence::ordinary(Convention::WzSx, vec![0.3, -1.0, 2.0, 0.1, 0.7]).unwrap();
        let g = AngleSequence::gqsp(vec![0.2, 1.0, 0.5], vec![0.1, -0.3, 2.0], 0.4, 1, 1)
            .unwrap()
            .with_scale(0.5, Complex64::new(0.0, 1.0));
        let seqs = [s, g];
        let a = sup_error(&seqs, 1.3).unwrap();
        let b = sampled_error(&seqs, 1.3, 1 << 16).unwrap();
        assert!((a - b).abs() < 1e-6 * a, "{a} {b}");
    }

    #[test]
    fn emitted_counts() {
        let a = AngleSequence::ordinary(Convention::WzSx, vec![0.0; 11]).unwrap();
        let b = AngleSequence::ordinary(Convention::WzSx, vec![0.0; 10]).unwrap();
        assert_eq!(emitted_queries(&[a, b]), 4 * 10 - 2);
        let g = AngleSequence::gqsp(vec![0.0; 21], vec![0.0; 21], 0.0, 10, 10).unwrap();
        assert_eq!(emitted_queries(&[g]), 20);
    }

    #[test]
    fn products_are_unitary() {
        let s = AngleSequence::ordinary(Convention::WxSz, vec![0.3, -1.0, 2.0, 0.1]).unwrap();
        assert!(unitarity_residual(&[s]).unwrap() < 1e-14);
    }
}
