//! Truncated and partitioned Hamiltonian-simulation targets `e^{-i tau x}`.

use num_complex::Complex64;

use crate::error::{QspError, Result};
use crate::laurent::{laurent_to_chebyshev, ChebPoly, LaurentPoly, Parity};
use crate::qspmodel::Convention;
use crate::specialfn::bessel_j_table;

/// Number of equispaced samples used for sup-norm checks at degree `d`.
pub fn sup_samples(d: usize) -> usize {
    64 * (d + 1)
}

/// Variable in which a truncated target is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X,
    W,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Truncated {
    /// Monomial-basis polynomial in `x`.
    X(ChebPoly),
    /// Laurent polynomial in `w = e^{i arccos x}`.
    W(LaurentPoly),
}

/// `J_k(tau)` for `k = 0..=kmax`, allowing `tau <= 0`.
fn bessel_values(tau: f64, kmax: usize) -> Result<Vec<f64>> {
    if !tau.is_finite() {
        return Err(QspError::Argument("tau must be finite".into()));
    }
    if tau == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return Ok(v);
    }
    let table = bessel_j_table(tau.abs(), kmax)?;
    Ok(table
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| if tau < 0.0 && k % 2 == 1 { -v } else { v })
        .collect())
}

/// Jacobi-Anger expansion of `e^{-i tau cos theta}` in `w = e^{i theta}`,
/// even orders kept up to `d`, odd orders up to `d - 1`.
pub fn jacobi_anger_laurent(tau: f64, d: usize) -> Result<LaurentPoly> {
    if d < 2 || d % 2 == 1 {
        return Err(QspError::Argument(format!(
            "truncation order must be even and at least 2, got {d}"
        )));
    }
    let j = bessel_values(tau, d)?;
    let n = d as i64;
    let coeffs = (-n..=n)
        .map(|k| {
            let m = k.unsigned_abs() as usize;
            match m % 4 {
                0 => Complex64::new(j[m], 0.0),
                2 => Complex64::new(-j[m], 0.0),
                1 => Complex64::new(0.0, -j[m]),
                _ => Complex64::new(0.0, j[m]),
            }
        })
        .collect();
    Ok(LaurentPoly::new(-n, coeffs))
}

/// Truncated `e^{-i tau x}` at even order `d` in the requested basis.
pub fn truncate_hamsim(tau: f64, d: usize, basis: Basis) -> Result<Truncated> {
    let f = jacobi_anger_laurent(tau, d)?;
    Ok(match basis {
        Basis::W => Truncated::W(f),
        Basis::X => Truncated::X(ChebPoly::new(laurent_to_chebyshev(&f)?)),
    })
}

/// How the scale `alpha` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// `alpha = 2`, the fixed overall scale 1/2.
    Benchmark,
    /// `alpha = (1 + margin) * max_j sup |part_j|`.
    Adaptive { margin: f64 },
}

/// One admissible piece of a partitioned target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPart {
    pub poly: LaurentPoly,
    pub weight: Complex64,
    /// Degree of the sequence that implements this part.
    pub degree: usize,
}

impl TargetPart {
    /// The part as a monomial-basis polynomial in `x`.
    pub fn as_cheb(&self) -> Result<ChebPoly> {
        Ok(ChebPoly::new(laurent_to_chebyshev(&self.poly)?))
    }

    pub fn parity(&self) -> Parity {
        self.poly.parity()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedTarget {
    pub convention: Convention,
    pub parts: Vec<TargetPart>,
    pub alpha: f64,
    pub d_plus: usize,
    pub d_minus: usize,
    pub d: usize,
}

impl PartitionedTarget {
    /// `alpha * sum_j weight_j part_j`.
    pub fn recombined(&self) -> LaurentPoly {
        self.parts.iter().fold(LaurentPoly::zero(), |acc, p| {
            acc.add(&p.poly.scale(p.weight * self.alpha))
        })
    }
}

/// Splits a truncated target into parts admissible for `convention`.
///
/// Ordinary QSP gets the even real part (weight 1) and the odd part divided by
/// `i` (weight `i`); GQSP gets a single part.
pub fn partition(
    f: &LaurentPoly,
    convention: Convention,
    d: usize,
    norm: Normalization,
) -> Result<PartitionedTarget> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let raw: Vec<TargetPart> = match convention {
        Convention::Gqsp => vec![TargetPart {
            poly: f.clone(),
            weight: one,
            degree: d,
        }],
        _ => {
            let even = f.project_parity(Parity::Even);
            let odd = f.project_parity(Parity::Odd).scale(-i);
            if !even.is_real(1e-14) || !odd.is_real(1e-14) {
                return Err(QspError::Precondition(
                    "ordinary QSP partition needs a real even part and an imaginary odd part"
                        .into(),
                ));
            }
            vec![
                TargetPart {
                    poly: even.real_part(),
                    weight: one,
                    degree: d,
                },
                TargetPart {
                    poly: odd.real_part(),
                    weight: i,
                    degree: d.saturating_sub(1),
                },
            ]
        }
    };
    let n = sup_samples(d);
    let alpha = match norm {
        Normalization::Benchmark => 2.0,
        Normalization::Adaptive { margin } => {
            let m = raw
                .iter()
                .map(|p| p.poly.sup_on_circle(n))
                .fold(0.0, f64::max);
            if m == 0.0 {
                1.0
            } else {
                (1.0 + margin) * m
            }
        }
    };
    let parts: Vec<TargetPart> = raw
        .into_iter()
        .map(|p| TargetPart {
            poly: p.poly.scale(Complex64::new(1.0 / alpha, 0.0)),
            ..p
        })
        .collect();
    for p in &parts {
        let sup = p.poly.sup_on_circle(n);
        if sup >= 1.0 {
            return Err(QspError::Normalization { sup });
        }
    }
    Ok(PartitionedTarget {
        convention,
        parts,
        alpha,
        d_plus: d,
        d_minus: if convention == Convention::Gqsp { d } else { 0 },
        d,
    })
}
