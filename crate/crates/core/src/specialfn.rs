//! Bessel functions of the first kind at integer order and Chebyshev polynomials.

use crate::error::{QspError, Result};

/// `J_0(tau) ..= J_kmax(tau)` for one argument.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselTable {
    tau: f64,
    values: Vec<f64>,
}

impl BesselTable {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kmax(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `J_k(tau)`; zero past the end of the table.
    pub fn get(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// `J_{-k} = (-1)^k J_k`.
    pub fn get_signed(&self, k: i64) -> f64 {
        let v = self.get(k.unsigned_abs() as usize);
        if k < 0 && k % 2 != 0 {
            -v
        } else {
            v
        }
    }
}

fn miller_start(tau: f64, kmax: usize) -> usize {
    let base = kmax.max(tau.ceil() as usize);
    base + 16 + (40.0 * base as f64).sqrt().ceil() as usize
}

/// Tabulates `J_k(tau)` for `k = 0..=kmax` by Miller's backward recurrence,
/// normalized with `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j_table(tau: f64, kmax: usize) -> Result<BesselTable> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(QspError::Domain(format!(
            "Bessel argument must be positive, got {tau}"
        )));
    }
    let start = miller_start(tau, kmax);
    let mut vals = vec![0.0f64; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / tau * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            vals.iter_mut().skip(k - 1).for_each(|v| *v *= 1e-250);
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.truncate(kmax + 1);
    vals.iter_mut().for_each(|v| *v /= norm);
    Ok(BesselTable { tau, values: vals })
}

/// `2 sum_{k>d} |J_k(tau)|`, the sup-norm bound on the Jacobi-Anger truncation error.
pub fn bessel_tail_bound(tau: f64, d: usize) -> Result<f64> {
    let kmax = d + 64 + 2 * tau.ceil() as usize;
    let table = bessel_j_table(tau, kmax)?;
    Ok(2.0
        * table.values()[d + 1..]
            .iter()
            .rev()
            .map(|v| v.abs())
            .sum::<f64>())
}

/// Smallest `d` with `2 sum_{k>d} |J_k(tau)| < tol`.
pub fn default_kmax(tau: f64, tol: f64) -> Result<usize> {
    let table = bessel_j_table(tau, 64 + 3 * tau.ceil() as usize)?;
    let v = table.values();
    let mut tail = 0.0;
    for d in (0..v.len()).rev() {
        if tail >= tol {
            return Ok(d + 1);
        }
        tail += 2.0 * v[d].abs();
    }
    Ok(0)
}

/// Chebyshev `T_k(x)` by the three-term recurrence.
pub fn chebyshev_t(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (1.0, x);
            for _ in 1..k {
                let c = 2.0 * x * b - a;
                a = b;
                b = c;
            }
            b
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn matches_series_oracle_values() {
        let t = bessel_j_table(10.0, 40).unwrap();
        let expect = [
            (0, -0.2459357644513483351977609),
            (1, 0.04347274616886143666974877),
            (2, 0.2546303136851206225317106),
            (5, -0.2340615281867936404436949),
            (10, 0.2074861066333588576972787),
            (20, 1.151336924781339778329528e-5),
            (30, 1.551096078257467006912145e-12),
            (34, 9.581766237065794581035551e-16),
            (40, 6.030895312346906631743294e-21),
        ];
        for (k, v) in expect {
            assert!(rel(t.get(k), v) < 1e-13, "k = {k}: {} vs {v}", t.get(k));
        }
    }

    #[test]
    fn other_arguments() {
        assert!(
            rel(
                bessel_j_table(1.0, 0).unwrap().get(0),
                0.7651976865579665514497175
            ) < 1e-13
        );
        assert!(
            rel(
                bessel_j_table(2.5, 3).unwrap().get(3),
                0.216600391039113524766689
            ) < 1e-13
        );
        assert!(
            rel(
                bessel_j_table(30.0, 50).unwrap().get(50),
                2.058165663156417810170819e-8
            ) < 1e-12
        );
    }

    #[test]
    fn small_argument_limit() {
        let t = bessel_j_table(1e-12, 4).unwrap();
        assert!((t.get(0) - 1.0).abs() < 1e-15);
        assert!(t.values()[1..].iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn rejects_nonpositive_argument() {
        assert!(matches!(bessel_j_table(0.0, 3), Err(QspError::Domain(_))));
        assert!(matches!(bessel_j_table(-1.0, 3), Err(QspError::Domain(_))));
    }

    #[test]
    fn recurrence_identity() {
        let tau = 10.0;
        let t = bessel_j_table(tau, 40).unwrap();
        for k in 1..40 {
            let lhs = t.get(k - 1) + t.get(k + 1);
            let rhs = 2.0 * k as f64 / tau * t.get(k);
            assert!((lhs - rhs).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn normalization_and_decay() {
        for tau in [0.5, 3.0, 10.0, 30.0] {
            let t = bessel_j_table(tau, 80 + tau as usize).unwrap();
            let v = t.values();
            let s = v[0] * v[0] + 2.0 * v[1..].iter().map(|x| x * x).sum::<f64>();
            assert!(s <= 1.0 + 1e-12 && s > 1.0 - 1e-12);
            for k in (tau.ceil() as usize + 2)..t.kmax() {
                if v[k].abs() > 1e-300 {
                    assert!(v[k + 1].abs() < v[k].abs());
                }
            }
        }
    }

    #[test]
    fn tail_bound_matches_oracle() {
        let expect = [
            (10, 0.468414629982146726),
            (12, 0.095441064038639356918),
            (14, 0.013582569706158666373),
            (16, 0.0014331110353157990092),
            (18, 0.00011693272518610040224),
            (20, 7.6134316413484934029e-6),
            (30, 6.1085779754547311059e-13),
            (34, 3.2526362624640398216e-16),
            (39, 1.3758981906990939175e-20),
            (50, 3.9114539203007991023e-31),
        ];
        for (d, v) in expect {
            assert!(
                rel(bessel_tail_bound(10.0, d).unwrap(), v) < 1e-12,
                "d = {d}"
            );
        }
    }

    #[test]
    fn default_kmax_reaches_tolerance() {
        let d = default_kmax(10.0, 1e-16).unwrap();
        assert!(bessel_tail_bound(10.0, d).unwrap() < 1e-16);
        assert!(bessel_tail_bound(10.0, d - 1).unwrap() >= 1e-16);
        assert_eq!(d, 35);
    }

    #[test]
    fn chebyshev_matches_cosine() {
        for k in 0..30 {
            for t in [0.1, 0.7, 2.0, 3.0] {
                let x = f64::cos(t);
                assert!((chebyshev_t(k, x) - (k as f64 * t).cos()).abs() < 1e-13);
            }
        }
    }
}
