//! Error-free transformations and a compensated complex Horner scheme.

use num_complex::Complex64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// A complex number carried as an unevaluated sum `hi + lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdComplex {
    pub hi: Complex64,
    pub lo: Complex64,
}

impl DdComplex {
    pub fn new(hi: Complex64) -> Self {
        DdComplex {
            hi,
            lo: Complex64::new(0.0, 0.0),
        }
    }

    pub fn value(&self) -> Complex64 {
        self.hi + self.lo
    }

    /// `self * z + a`, with the rounding errors of the leading terms kept in `lo`.
    pub fn mul_add(self, z: Complex64, a: Complex64) -> Self {
        let (x, y) = (self.hi, z);
        let (p1, e1) = two_prod(x.re, y.re);
        let (p2, e2) = two_prod(x.im, y.im);
        let (p3, e3) = two_prod(x.re, y.im);
        let (p4, e4) = two_prod(x.im, y.re);
        let (re, e5) = two_sum(p1, -p2);
        let (im, e6) = two_sum(p3, p4);
        let (re, e7) = two_sum(re, a.re);
        let (im, e8) = two_sum(im, a.im);
        let err = Complex64::new(e1 - e2 + e5 + e7, e3 + e4 + e6 + e8);
        DdComplex {
            hi: Complex64::new(re, im),
            lo: self.lo * z + err,
        }
    }
}

/// `p(z) = sum_k coeffs[k] z^k` evaluated as if in roughly twice the working precision.
pub fn compensated_horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(DdComplex::new(Complex64::new(0.0, 0.0)), |acc, &c| {
            acc.mul_add(z, c)
        })
        .value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_and_prod_are_exact() {
        let (s, e) = two_sum(1.0, 1e-20);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-20);
        let (p, e) = two_prod(1.0 + f64::EPSILON, 1.0 - f64::EPSILON);
        assert_eq!(p, 1.0);
        assert_eq!(e, -f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn compensated_horner_beats_plain_near_a_multiple_root() {
        // (z - 1)^7 expanded, evaluated next to its root
        let binom = [1.0, -7.0, 21.0, -35.0, 35.0, -21.0, 7.0, -1.0];
        let coeffs: Vec<Complex64> = binom
            .iter()
            .rev()
            .map(|&c| Complex64::new(c, 0.0))
            .collect();
        let z = Complex64::new(1.0 + 1e-3, 0.0);
        let exact = 1e-21;
        let plain = coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |a, &c| a * z + c);
        let comp = compensated_horner(&coeffs, z);
        assert!((comp.re - exact).abs() < 1e-25);
        assert!((plain.re - exact).abs() > (comp.re - exact).abs());
    }
}
