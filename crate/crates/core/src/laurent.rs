//! Complex-coefficient Laurent polynomials in `w` and Chebyshev series in `x`.
//!
//! Every function handled by the pipeline lives in one of these two carriers:
//! targets and completion partners on the unit circle are [`LaurentPoly`],
//! the `(W_x, S_z)` pair `(P, Q)` is a pair of [`ChebPoly`].

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{QspError, Result};

/// Magnitude below which a coefficient counts as zero for degree and parity queries.
pub const TRIM_EPS: f64 = 1e-14;

/// Result length at which [`LaurentPoly::mul`] switches from direct to FFT convolution.
pub const FFT_CROSSOVER: usize = 128;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn of_degree(d: i64) -> Parity {
        if d.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Parity of a product, when both factors have one.
    pub fn add(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }
}

fn parity_from<I: Iterator<Item = (i64, Complex64)>>(it: I) -> Parity {
    let (mut even, mut odd) = (false, false);
    for (k, c) in it {
        if c.norm() > TRIM_EPS {
            if k.rem_euclid(2) == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
    }
    match (even, odd) {
        (_, false) => Parity::Even,
        (false, true) => Parity::Odd,
        (true, true) => Parity::None,
    }
}

/// Linear convolution of two dense coefficient vectors.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let n = a.len() + b.len() - 1;
    if n < FFT_CROSSOVER {
        convolve_direct(a, b)
    } else {
        convolve_fft(a, b)
    }
}

pub(crate) fn convolve_direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn convolve_fft(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len() + b.len() - 1;
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa = a.to_vec();
    fa.resize(size, ZERO);
    let mut fb = b.to_vec();
    fb.resize(size, ZERO);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa.truncate(n);
    fa.iter_mut().for_each(|c| *c *= scale);
    fa
}

/// A Laurent polynomial `sum_k c_k w^k` stored densely over the window `[lo, hi]`.
///
/// The zero polynomial has an empty window; its `d_min`/`d_max` are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly {
    lo: i64,
    coeffs: Vec<Complex64>,
}

impl LaurentPoly {
    pub fn new(lo: i64, coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            return Self::zero();
        }
        LaurentPoly { lo, coeffs }
    }

    pub fn from_real(lo: i64, coeffs: &[f64]) -> Self {
        Self::new(lo, coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        LaurentPoly {
            lo: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(k: i64, c: Complex64) -> Self {
        LaurentPoly {
            lo: k,
            coeffs: vec![c],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest stored exponent; `lo - 1` for the zero polynomial.
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k - self.lo;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            ZERO
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Iterator over `(exponent, coefficient)` for the stored window.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.lo + i as i64, c))
    }

    /// Lowest exponent with `|c| > TRIM_EPS`.
    pub fn d_min(&self) -> Option<i64> {
        self.terms()
            .find(|(_, c)| c.norm() > TRIM_EPS)
            .map(|(k, _)| k)
    }

    /// Highest exponent with `|c| > TRIM_EPS`.
    pub fn d_max(&self) -> Option<i64> {
        self.terms()
            .filter(|(_, c)| c.norm() > TRIM_EPS)
            .map(|(k, _)| k)
            .last()
    }

    /// Symmetric degree `max(|d_min|, |d_max|)`, 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        match (self.d_min(), self.d_max()) {
            (Some(a), Some(b)) => a.abs().max(b.abs()) as usize,
            _ => 0,
        }
    }

    pub fn parity(&self) -> Parity {
        parity_from(self.terms())
    }

    /// Copy restricted (or zero-extended) to the window `[lo, hi]`.
    pub fn with_window(&self, lo: i64, hi: i64) -> Self {
        if hi < lo {
            return Self::zero();
        }
        let coeffs = (lo..=hi).map(|k| self.coeff(k)).collect();
        LaurentPoly { lo, coeffs }
    }

    /// Drops outer coefficients with magnitude `<= eps`.
    pub fn trimmed(&self, eps: f64) -> Self {
        match (
            self.terms().find(|(_, c)| c.norm() > eps).map(|(k, _)| k),
            self.terms()
                .filter(|(_, c)| c.norm() > eps)
                .map(|(k, _)| k)
                .last(),
        ) {
            (Some(a), Some(b)) => self.with_window(a, b),
            _ => Self::zero(),
        }
    }

    /// Evaluates the polynomial at `w != 0`, Horner in `w` for the non-negative
    /// exponents and in `w^{-1}` for the negative ones.
    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        if w.norm() == 0.0 {
            return Err(QspError::Domain(
                "Laurent polynomial evaluated at w = 0".into(),
            ));
        }
        Ok(self.eval_unchecked(w))
    }

    pub(crate) fn eval_unchecked(&self, w: Complex64) -> Complex64 {
        if self.coeffs.is_empty() {
            return ZERO;
        }
        let hi = self.hi();
        let mut pos = ZERO;
        if hi >= 0 {
            let start = self.lo.max(0);
            for k in (start..=hi).rev() {
                pos = pos * w + self.coeff(k);
            }
            if self.lo > 0 {
                pos *= w.powi(self.lo as i32);
            }
        }
        let mut neg = ZERO;
        if self.lo < 0 {
            let winv = w.inv();
            let end = hi.min(-1);
            for k in self.lo..=end {
                neg = neg * winv + self.coeff(k);
            }
            neg *= winv.powi((-end) as i32);
        }
        pos + neg
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        if self.coeffs.is_empty() {
            return other.clone();
        }
        if other.coeffs.is_empty() {
            return self.clone();
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let coeffs = (lo..=hi).map(|k| self.coeff(k) + other.coeff(k)).collect();
        LaurentPoly { lo, coeffs }
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> LaurentPoly {
        LaurentPoly {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// Multiplies by `w^k`.
    pub fn shift(&self, k: i64) -> LaurentPoly {
        LaurentPoly {
            lo: self.lo + k,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Product over the window `[a.lo + b.lo, a.hi + b.hi]`.
    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero();
        }
        LaurentPoly {
            lo: self.lo + other.lo,
            coeffs: convolve(&self.coeffs, &other.coeffs),
        }
    }

    /// `q(w) = conj(p)(w^{-1})`: exponent `k -> -k`, coefficients conjugated.
    /// On the unit circle `q(w) = conj(p(w))`.
    pub fn star_inverse(&self) -> LaurentPoly {
        if self.coeffs.is_empty() {
            return Self::zero();
        }
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        LaurentPoly {
            lo: -self.hi(),
            coeffs,
        }
    }

    /// `p(w^{-1})` with coefficients left as they are.
    pub fn reflect(&self) -> LaurentPoly {
        if self.coeffs.is_empty() {
            return Self::zero();
        }
        LaurentPoly {
            lo: -self.hi(),
            coeffs: self.coeffs.iter().rev().copied().collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest `|p(e^{i theta})|` over `n` equispaced angles.
    pub fn sup_on_circle(&self, n: usize) -> f64 {
        (0..n)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                self.eval_unchecked(Complex64::from_polar(1.0, t)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Keeps only exponents of the given parity.
    pub fn project_parity(&self, parity: Parity) -> LaurentPoly {
        let keep = |k: i64| match parity {
            Parity::Even => k.rem_euclid(2) == 0,
            Parity::Odd => k.rem_euclid(2) == 1,
            Parity::None => true,
        };
        LaurentPoly {
            lo: self.lo,
            coeffs: self
                .terms()
                .map(|(k, c)| if keep(k) { c } else { ZERO })
                .collect(),
        }
    }

    /// Replaces each coefficient by its real part.
    pub fn real_part(&self) -> LaurentPoly {
        LaurentPoly {
            lo: self.lo,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Complex64::new(c.re, 0.0))
                .collect(),
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol)
    }
}

/// Maps Chebyshev-basis coefficients `sum_k a_k T_k(x)` to the Laurent polynomial
/// in `w = e^{i arccos x}`, using `T_k -> (w^k + w^{-k}) / 2`.
pub fn cheb_to_laurent(cheb: &[Complex64]) -> LaurentPoly {
    if cheb.is_empty() {
        return LaurentPoly::zero();
    }
    let n = cheb.len() as i64 - 1;
    let mut coeffs = vec![ZERO; (2 * n + 1) as usize];
    for (k, &a) in cheb.iter().enumerate() {
        let k = k as i64;
        if k == 0 {
            coeffs[n as usize] += a;
        } else {
            coeffs[(n + k) as usize] += a * 0.5;
            coeffs[(n - k) as usize] += a * 0.5;
        }
    }
    LaurentPoly::new(-n, coeffs)
}

/// Inverse of [`cheb_to_laurent`] for reciprocal-symmetric input (`c_k = c_{-k}`).
pub fn laurent_to_chebyshev(p: &LaurentPoly) -> Result<Vec<Complex64>> {
    let n = p.degree() as i64;
    let scale = p.max_abs_coeff().max(1.0);
    if (1..=n).any(|k| (p.coeff(k) - p.coeff(-k)).norm() > 1e-13 * scale) {
        return Err(QspError::Precondition(
            "Laurent polynomial is not symmetric under w -> 1/w".into(),
        ));
    }
    Ok((0..=n)
        .map(|k| {
            if k == 0 {
                p.coeff(0)
            } else {
                p.coeff(k) + p.coeff(-k)
            }
        })
        .collect())
}

/// A polynomial `sum_k c_k T_k(x)` in the Chebyshev basis of the first kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebPoly {
    coeffs: Vec<Complex64>,
}

impl ChebPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        ChebPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        ChebPoly {
            coeffs: coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }

    pub fn zero() -> Self {
        ChebPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        ChebPoly { coeffs: vec![c] }
    }

    /// `x = T_1(x)`.
    pub fn x() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    /// Converts `sum_k a_k U_k(x)` using `U_n = 2 sum_{j = n, n-2, ...} T_j - [n even] T_0`.
    pub fn from_chebyshev_u(a: &[Complex64]) -> Self {
        let mut out = vec![ZERO; a.len()];
        for (n, &an) in a.iter().enumerate() {
            for j in (n % 2..=n).step_by(2) {
                out[j] += an * if j == 0 { 1.0 } else { 2.0 };
            }
        }
        ChebPoly { coeffs: out }
    }

    /// Converts from the monomial basis.
    pub fn from_monomial(m: &[Complex64]) -> Self {
        let mut out = ChebPoly::zero();
        for &c in m.iter().rev() {
            out = out.mul_x().add(&ChebPoly::constant(c));
        }
        out
    }

    /// Reciprocal-symmetric Laurent polynomial in `w = e^{i arccos x}`.
    pub fn to_laurent(&self) -> LaurentPoly {
        cheb_to_laurent(&self.coeffs)
    }

    /// Inverse of [`ChebPoly::to_laurent`]; the input must be reciprocal-symmetric.
    pub fn from_laurent(p: &LaurentPoly) -> Result<Self> {
        laurent_to_chebyshev(p).map(ChebPoly::new)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    /// Coefficient of `x^k` contributed by `T_k`; equals the monomial leading
    /// coefficient when `k` is the degree.
    pub fn leading_monomial(&self, k: usize) -> Complex64 {
        match k {
            0 => self.coeff(0),
            _ => self.coeff(k) * 2f64.powi(k as i32 - 1),
        }
    }

    /// Highest index with `|c| > TRIM_EPS`, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.degree_with(TRIM_EPS)
    }

    pub fn degree_with(&self, eps: f64) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.norm() > eps)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn parity(&self) -> Parity {
        parity_from(self.coeffs.iter().enumerate().map(|(k, &c)| (k as i64, c)))
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.eval_complex(Complex64::new(x, 0.0))
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        let mut b1 = ZERO;
        let mut b2 = ZERO;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b = c + x * b1 * 2.0 - b2;
            b2 = b1;
            b1 = b;
        }
        self.coeff(0) + x * b1 - b2
    }

    /// Complex conjugation of the coefficients (`P*` of the pair `(P, Q)`).
    pub fn conjugate(&self) -> ChebPoly {
        ChebPoly {
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn add(&self, other: &ChebPoly) -> ChebPoly {
        let n = self.len().max(other.len());
        ChebPoly {
            coeffs: (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    pub fn sub(&self, other: &ChebPoly) -> ChebPoly {
        let n = self.len().max(other.len());
        ChebPoly {
            coeffs: (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> ChebPoly {
        ChebPoly {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// Product via `T_m T_n = (T_{m+n} + T_{|m-n|}) / 2`, computed as a Laurent product.
    pub fn mul(&self, other: &ChebPoly) -> ChebPoly {
        if self.is_empty() || other.is_empty() {
            return ChebPoly::zero();
        }
        let p = self.to_laurent().mul(&other.to_laurent());
        let n = (self.len() + other.len() - 2) as i64;
        ChebPoly {
            coeffs: (0..=n)
                .map(|k| {
                    if k == 0 {
                        p.coeff(0)
                    } else {
                        p.coeff(k) + p.coeff(-k)
                    }
                })
                .collect(),
        }
    }

    /// Multiplies by `x`: `x T_n = (T_{n+1} + T_{|n-1|}) / 2`.
    pub fn mul_x(&self) -> ChebPoly {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let mut coeffs = vec![ZERO; self.len() + 1];
        for (n, &c) in self.coeffs.iter().enumerate() {
            if n == 0 {
                coeffs[1] += c;
            } else {
                coeffs[n + 1] += c * 0.5;
                coeffs[n - 1] += c * 0.5;
            }
        }
        ChebPoly { coeffs }
    }

    /// Multiplies by `1 - x^2 = (T_0 - T_2) / 2`.
    pub fn mul_one_minus_x2(&self) -> ChebPoly {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let x2 = self.mul_x().mul_x();
        self.sub(&x2)
    }

    /// Resizes to exactly `len` coefficients, dropping or zero-padding the top.
    pub fn resized(&self, len: usize) -> ChebPoly {
        ChebPoly {
            coeffs: (0..len).map(|k| self.coeff(k)).collect(),
        }
    }

    pub fn project_parity(&self, parity: Parity) -> ChebPoly {
        ChebPoly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| match parity {
                    Parity::Even if k % 2 == 1 => ZERO,
                    Parity::Odd if k % 2 == 0 => ZERO,
                    _ => c,
                })
                .collect(),
        }
    }

    pub fn real_part(&self) -> ChebPoly {
        ChebPoly {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Complex64::new(c.re, 0.0))
                .collect(),
        }
    }

    pub fn imag_part(&self) -> ChebPoly {
        ChebPoly {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Complex64::new(c.im, 0.0))
                .collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}
