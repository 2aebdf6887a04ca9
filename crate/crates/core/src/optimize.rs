//! Angle finding by minimizing the sampled loss
//! `L = (1/n) sum_j |<0|U(x_j)|0> - f(x_j)|^2` with L-BFGS.
//!
//! Ordinary QSP compares the real part of `<0|U|0>` and may restrict to
//! palindromic sequences; GQSP optimizes `(Theta, Phi, lambda)` jointly.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QspError, Result};
use crate::numlin::lbfgs::{minimize, LbfgsOptions};
use crate::qspmodel::{AngleSequence, Convention, Mat2};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Target samples at the loss nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub convention: Convention,
    pub d_plus: usize,
    pub d_minus: usize,
    /// `x_j = cos((2j - 1) pi / (4 d~))`.
    pub nodes: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Palindromic parameterization `phi_k = phi_{d-k}`.
    pub symmetric: bool,
}

/// `ceil((d + 1) / 2)`.
pub fn reduced_degree(d: usize) -> usize {
    d / 2 + 1
}

/// The first `count` nodes `cos((2j - 1) pi / (4 d~))`.
pub fn loss_nodes(d: usize, count: usize) -> Vec<f64> {
    let dt = reduced_degree(d) as f64;
    (1..=count)
        .map(|j| ((2 * j - 1) as f64 * PI / (4.0 * dt)).cos())
        .collect()
}

impl LossSpec {
    /// Ordinary QSP of degree `d` for a real target `f(x)`.
    pub fn ordinary(
        convention: Convention,
        d: usize,
        f: impl Fn(f64) -> f64,
        symmetric: bool,
    ) -> Result<Self> {
        if !convention.is_ordinary() {
            return Err(QspError::Argument("use LossSpec::gqsp for GQSP".into()));
        }
        let nodes = loss_nodes(d, reduced_degree(d));
        let values = nodes.iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        Ok(LossSpec {
            convention,
            d_plus: d,
            d_minus: 0,
            nodes,
            values,
            symmetric,
        })
    }

    /// GQSP with exponent window `[-d_minus, d_plus]` for `f(w)`; the node
    /// count is `d = max(d_plus, d_minus)`.
    pub fn gqsp(d_plus: usize, d_minus: usize, f: impl Fn(Complex64) -> Complex64) -> Self {
        let d = d_plus.max(d_minus);
        let nodes = loss_nodes(d, d.max(1));
        let values = nodes
            .iter()
            .map(|&x| f(Complex64::from_polar(1.0, x.acos())))
            .collect();
        LossSpec {
            convention: Convention::Gqsp,
            d_plus,
            d_minus,
            nodes,
            values,
            symmetric: false,
        }
    }

    pub fn degree(&self) -> usize {
        self.d_plus + self.d_minus
    }

    /// Length of the flat parameter vector.
    pub fn arity(&self) -> usize {
        let n = self.degree() + 1;
        match (self.convention, self.symmetric) {
            (Convention::Gqsp, _) => 2 * n + 1,
            (_, true) => n.div_ceil(2),
            (_, false) => n,
        }
    }

    /// Full phase list from a parameter vector.
    pub fn expand(&self, params: &[f64]) -> Vec<f64> {
        if !self.symmetric {
            return params.to_vec();
        }
        let n = self.degree() + 1;
        (0..n).map(|k| params[k.min(n - 1 - k)]).collect()
    }

    /// The angle sequence a parameter vector describes.
    pub fn sequence(&self, params: &[f64]) -> Result<AngleSequence> {
        match self.convention {
            Convention::Gqsp => {
                let n = self.degree() + 1;
                AngleSequence::gqsp(
                    params[..n].to_vec(),
                    params[n..2 * n].to_vec(),
                    params[2 * n],
                    self.d_plus,
                    self.d_minus,
                )
            }
            c => AngleSequence::ordinary(c, self.expand(params)),
        }
    }

    /// Flat parameters of a sequence (the independent half when symmetric).
    pub fn params_of(&self, seq: &AngleSequence) -> Vec<f64> {
        match self.convention {
            Convention::Gqsp => seq
                .theta
                .iter()
                .chain(&seq.phi)
                .copied()
                .chain([seq.lambda])
                .collect(),
            _ if self.symmetric => seq.phi[..self.arity()].to_vec(),
            _ => seq.phi.clone(),
        }
    }
}

type Row = [Complex64; 2];

fn row_mul(r: Row, m: &Mat2) -> Row {
    [r[0] * m.a + r[1] * m.c, r[0] * m.b + r[1] * m.d]
}

fn mul_col(m: &Mat2, c: Row) -> Row {
    [m.a * c[0] + m.b * c[1], m.c * c[0] + m.d * c[1]]
}

fn inner(r: Row, m: &Mat2, c: Row) -> Complex64 {
    let mc = mul_col(m, c);
    r[0] * mc[0] + r[1] * mc[1]
}

/// `<0|U|0>` and its derivative in every angle, for one node of an ordinary sequence.
fn ordinary_entry(conv: Convention, phi: &[f64], x: f64) -> (Complex64, Vec<Complex64>) {
    let (sig, gen): (Mat2, fn(f64) -> Mat2) = match conv {
        Convention::WxSz => (Mat2::wx(x), Mat2::sz),
        _ => (Mat2::wz(Complex64::from_polar(1.0, x.acos())), Mat2::sx),
    };
    // i sigma with dS/dphi = i sigma S
    let isig = match conv {
        Convention::WxSz => Mat2::new(I, ZERO, ZERO, -I),
        _ => Mat2::new(ZERO, I, I, ZERO),
    };
    let s: Vec<Mat2> = phi.iter().map(|&p| gen(p)).collect();
    let n = phi.len();
    let mut prefix = Vec::with_capacity(n);
    let mut r: Row = [Complex64::new(1.0, 0.0), ZERO];
    for (k, sk) in s.iter().enumerate() {
        prefix.push(r);
        r = row_mul(r, sk);
        if k + 1 < n {
            r = row_mul(r, &sig);
        }
    }
    let value = r[0];
    let mut grad = vec![ZERO; n];
    let mut c: Row = [Complex64::new(1.0, 0.0), ZERO];
    for k in (0..n).rev() {
        grad[k] = inner(prefix[k], &isig.mul(&s[k]), c);
        c = mul_col(&s[k], c);
        if k > 0 {
            c = mul_col(&sig, c);
        }
    }
    (value, grad)
}

/// `<0|U|0>` of a GQSP sequence and its derivative in `(Theta, Phi, lambda)`.
fn gqsp_entry(
    theta: &[f64],
    phi: &[f64],
    lambda: f64,
    d_minus: usize,
    w: Complex64,
) -> (Complex64, Vec<Complex64>) {
    let n = theta.len();
    let (w0, w1) = (Mat2::w0(w), Mat2::w1(w));
    let rot = |k: usize| Mat2::r(theta[k], phi[k], if k == 0 { lambda } else { 0.0 });
    let d_theta = |k: usize| {
        let l = if k == 0 { lambda } else { 0.0 };
        let (s, c) = theta[k].sin_cos();
        Mat2::new(
            -Complex64::from_polar(s, l + phi[k]),
            Complex64::from_polar(c, l),
            Complex64::from_polar(c, phi[k]),
            Complex64::new(s, 0.0),
        )
    };
    let d_phi = |k: usize| {
        let l = if k == 0 { lambda } else { 0.0 };
        let (s, c) = theta[k].sin_cos();
        Mat2::new(
            I * Complex64::from_polar(c, l + phi[k]),
            ZERO,
            I * Complex64::from_polar(s, phi[k]),
            ZERO,
        )
    };
    let r: Vec<Mat2> = (0..n).map(rot).collect();
    let signal = |j: usize| if j <= d_minus { &w1 } else { &w0 };
    let mut prefix = Vec::with_capacity(n);
    let mut row: Row = [Complex64::new(1.0, 0.0), ZERO];
    for (k, rk) in r.iter().enumerate() {
        if k > 0 {
            row = row_mul(row, signal(k));
        }
        prefix.push(row);
        row = row_mul(row, rk);
    }
    let value = row[0];
    let mut grad = vec![ZERO; 2 * n + 1];
    let mut col: Row = [Complex64::new(1.0, 0.0), ZERO];
    for k in (0..n).rev() {
        grad[k] = inner(prefix[k], &d_theta(k), col);
        grad[n + k] = inner(prefix[k], &d_phi(k), col);
        if k == 0 {
            // d/dlambda multiplies the top row of R_0 by i
            let top = Mat2::new(I * r[0].a, I * r[0].b, ZERO, ZERO);
            grad[2 * n] = inner(prefix[0], &top, col);
        }
        col = mul_col(&r[k], col);
        if k > 0 {
            col = mul_col(signal(k), col);
        }
    }
    (value, grad)
}

/// Loss value and gradient with respect to the flat parameter vector.
pub fn loss_and_gradient(spec: &LossSpec, params: &[f64]) -> Result<(f64, Vec<f64>)> {
    if params.len() != spec.arity() {
        return Err(QspError::Argument(format!(
            "expected {} parameters, got {}",
            spec.arity(),
            params.len()
        )));
    }
    let m = spec.nodes.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    match spec.convention {
        Convention::Gqsp => {
            let n = spec.degree() + 1;
            let (theta, phi, lambda) = (&params[..n], &params[n..2 * n], params[2 * n]);
            for (&x, &f) in spec.nodes.iter().zip(&spec.values) {
                let w = Complex64::from_polar(1.0, x.acos());
                let (u, du) = gqsp_entry(theta, phi, lambda, spec.d_minus, w);
                let r = u - f;
                loss += r.norm_sqr();
                for (g, d) in grad.iter_mut().zip(&du) {
                    *g += 2.0 * (r.conj() * d).re;
                }
            }
        }
        conv => {
            let phi = spec.expand(params);
            let last = phi.len() - 1;
            for (&x, &f) in spec.nodes.iter().zip(&spec.values) {
                let (u, du) = ordinary_entry(conv, &phi, x);
                let r = u.re - f.re;
                loss += r * r;
                for (k, d) in du.iter().enumerate() {
                    let slot = if spec.symmetric { k.min(last - k) } else { k };
                    grad[slot] += 2.0 * r * d.re;
                }
            }
        }
    }
    grad.iter_mut().for_each(|g| *g /= m);
    Ok((loss / m, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// `(pi/4, 0, ..., 0, pi/4)`; ordinary QSP only.
    Symmetric,
    /// Angles uniform on `[-pi, pi)`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub sequence: AngleSequence,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_inf: f64,
}

/// Runs L-BFGS (memory 10, strong Wolfe c1 = 1e-4, c2 = 0.9) until the gradient
/// sup-norm is at most 1e-13 or 5000 iterations pass.
pub fn optimize_angles(spec: &LossSpec, init: Init) -> Result<Optimized> {
    optimize_with(spec, init, &LbfgsOptions::default())
}

pub fn optimize_with(spec: &LossSpec, init: Init, opts: &LbfgsOptions) -> Result<Optimized> {
    // mirrored angles are stored once, scaled by sqrt(2)
    let n = spec.degree() + 1;
    let scale: Vec<f64> = (0..spec.arity())
        .map(|k| {
            if spec.symmetric && 2 * k + 1 != n {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                1.0
            }
        })
        .collect();
    let u0: Vec<f64> = initial_point(spec, init)?
        .iter()
        .zip(&scale)
        .map(|(x, s)| x / s)
        .collect();
    let mut failure = None;
    let result = minimize(
        |u| {
            let x: Vec<f64> = u.iter().zip(&scale).map(|(u, s)| u * s).collect();
            match loss_and_gradient(spec, &x) {
                Ok((f, g)) => (f, g.iter().zip(&scale).map(|(g, s)| g * s).collect()),
                Err(e) => {
                    failure = Some(e);
                    (f64::INFINITY, vec![0.0; u.len()])
                }
            }
        },
        &u0,
        opts,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let x: Vec<f64> = result.x.iter().zip(&scale).map(|(u, s)| u * s).collect();
    Ok(Optimized {
        sequence: spec.sequence(&x)?,
        loss: result.f,
        iterations: result.iterations,
        converged: result.converged,
        grad_inf: result.grad_inf,
    })
}

fn initial_point(spec: &LossSpec, init: Init) -> Result<Vec<f64>> {
    let n = spec.arity();
    match init {
        Init::Symmetric => {
            if spec.convention == Convention::Gqsp {
                return Err(QspError::Unsupported(
                    "symmetric initialization needs ordinary QSP".into(),
                ));
            }
            let mut phi = vec![0.0; spec.degree() + 1];
            phi[0] = FRAC_PI_4;
            *phi.last_mut().unwrap() = FRAC_PI_4;
            Ok(if spec.symmetric {
                phi[..n].to_vec()
            } else {
                phi
            })
        }
        Init::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n).map(|_| rng.random_range(-PI..PI)).collect())
        }
    }
}
