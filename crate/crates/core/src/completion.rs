//! Completion: given an admissible target, build the partner polynomial so the
//! pair is the top row (or first column block) of a unitary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QspError, Result};
use crate::laurent::{laurent_to_chebyshev, ChebPoly, LaurentPoly, Parity, TRIM_EPS};
use crate::numlin::fourier::{circle_grid, coefficient, fourier_coeffs, fourier_coeffs_adaptive};
use crate::numlin::hankel::prony_null_vector;
use crate::numlin::roots::all_roots;
use crate::qspmodel::{Convention, Mat2};
use crate::target::sup_samples;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Angle of the normalization point `w0 = e^{i NORM_ANGLE}`.
pub const NORM_ANGLE: f64 = 0.4242;
/// `| |s| - 1 |` below which a root counts as lying on the unit circle
/// (and `|Im s|` below which a root of `A(y)` counts as real).
pub const CLASSIFY_TOL: f64 = 1e-10;
/// Roots this close to each other on the boundary are merged to their mean.
pub const CLUSTER_TOL: f64 = 1e-6;
/// `|f| >= 1 - SINGULAR_TOL` on the sampling grid is a Prony singularity.
pub const SINGULAR_TOL: f64 = 1e-8;

/// Largest certificate a returned pair may carry.
pub const CERT_TOL: f64 = 1e-10;

/// Which root of each reflection pair builds the partner polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootChoice {
    /// Always the root inside the unit disc (or the upper-half-plane representative).
    Deterministic,
    /// Each symmetry orbit is reflected with probability 1/2.
    Randomized { seed: u64 },
}

impl RootChoice {
    fn rng(self) -> Option<ChaCha8Rng> {
        match self {
            RootChoice::Deterministic => None,
            RootChoice::Randomized { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairData {
    /// `P(x)`, `Q(x)` of `[[P, iQ sqrt(1-x^2)], [iQ* sqrt(1-x^2), P*]]`.
    Wx { p: ChebPoly, q: ChebPoly },
    /// `F(w)`, `G(w)` of `[[F, iG], ...]`.
    Laurent { f: LaurentPoly, g: LaurentPoly },
}

/// A pair certified against the unitarity condition of its convention.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionPair {
    pub convention: Convention,
    pub d_plus: usize,
    pub d_minus: usize,
    pub data: PairData,
    /// Largest violation of the unitarity identity on the sampling grid.
    pub certificate: f64,
}

/// `max | |P|^2 + (1 - x^2)|Q|^2 - 1 |` over `n` Chebyshev nodes.
pub fn certificate_wx(p: &ChebPoly, q: &ChebPoly, n: usize) -> f64 {
    (0..n)
        .map(|j| {
            let x = ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos();
            (p.eval(x).norm_sqr() + (1.0 - x * x) * q.eval(x).norm_sqr() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// `max | |F|^2 + |G|^2 - 1 |` over `n` equispaced unit-circle points.
pub fn certificate_laurent(f: &LaurentPoly, g: &LaurentPoly, n: usize) -> f64 {
    (0..n)
        .map(|j| {
            let w = Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / n as f64);
            (f.eval_unchecked(w).norm_sqr() + g.eval_unchecked(w).norm_sqr() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

fn rootfind_checked(pair: CompletionPair) -> Result<CompletionPair> {
    if pair.certificate <= CERT_TOL {
        Ok(pair)
    } else {
        Err(QspError::Uncertified {
            certificate: pair.certificate,
            tol: CERT_TOL,
        })
    }
}

/// A failed certificate is reported like an ambiguous null space.
fn prony_checked(pair: CompletionPair) -> Result<CompletionPair> {
    if pair.certificate <= CERT_TOL {
        Ok(pair)
    } else {
        Err(QspError::DegenerateNullSpace(format!(
            "certificate {:.3e} exceeds {CERT_TOL:.0e}; apply the stability split",
            pair.certificate
        )))
    }
}

impl CompletionPair {
    pub fn wx(p: ChebPoly, q: ChebPoly, d: usize) -> Self {
        let certificate = certificate_wx(&p, &q, sup_samples(d));
        CompletionPair {
            convention: Convention::WxSz,
            d_plus: d,
            d_minus: 0,
            data: PairData::Wx { p, q },
            certificate,
        }
    }

    pub fn wz(f: LaurentPoly, g: LaurentPoly, d: usize) -> Self {
        let certificate = certificate_laurent(&f, &g, sup_samples(d));
        CompletionPair {
            convention: Convention::WzSx,
            d_plus: d,
            d_minus: 0,
            data: PairData::Laurent { f, g },
            certificate,
        }
    }

    pub fn gqsp(f: LaurentPoly, g: LaurentPoly, d_plus: usize, d_minus: usize) -> Self {
        let certificate = certificate_laurent(&f, &g, sup_samples(d_plus + d_minus));
        CompletionPair {
            convention: Convention::Gqsp,
            d_plus,
            d_minus,
            data: PairData::Laurent { f, g },
            certificate,
        }
    }

    pub fn degree(&self) -> usize {
        self.d_plus + self.d_minus
    }

    pub fn laurent(&self) -> Option<(&LaurentPoly, &LaurentPoly)> {
        match &self.data {
            PairData::Laurent { f, g } => Some((f, g)),
            PairData::Wx { .. } => None,
        }
    }

    pub fn wx_polys(&self) -> Option<(&ChebPoly, &ChebPoly)> {
        match &self.data {
            PairData::Wx { p, q } => Some((p, q)),
            PairData::Laurent { .. } => None,
        }
    }

    /// The unitary the pair describes at angle `theta`. For GQSP only the top
    /// row is determined; the bottom row is filled to make it unitary.
    pub fn matrix_at(&self, theta: f64) -> Mat2 {
        match &self.data {
            PairData::Wx { p, q } => {
                let x = theta.cos();
                let s = (1.0 - x * x).max(0.0).sqrt();
                let (pv, qv) = (p.eval(x), q.eval(x));
                Mat2::new(pv, I * qv * s, I * qv.conj() * s, pv.conj())
            }
            PairData::Laurent { f, g } => {
                let w = Complex64::from_polar(1.0, theta);
                let (fv, gv) = (f.eval_unchecked(w), g.eval_unchecked(w));
                match self.convention {
                    Convention::Gqsp => Mat2::new(fv, I * gv, I * gv.conj(), fv.conj()),
                    _ => {
                        let wi = w.inv();
                        Mat2::new(fv, I * gv, I * g.eval_unchecked(wi), f.eval_unchecked(wi))
                    }
                }
            }
        }
    }

    /// Checks the degree, parity and reality clauses of the convention's theorem.
    pub fn check_structure(&self) -> Result<()> {
        let fail = |m: String| Err(QspError::Precondition(m));
        match (&self.data, self.convention) {
            (PairData::Wx { p, q }, _) => {
                let d = self.d_plus;
                if p.degree().is_some_and(|k| k > d) || q.degree().is_some_and(|k| k + 1 > d) {
                    return fail(format!("deg P <= {d}, deg Q <= {} violated", d as i64 - 1));
                }
                if !parity_ok(p.parity(), d as i64, p.degree().is_none())
                    || !parity_ok(q.parity(), d as i64 - 1, q.degree().is_none())
                {
                    return fail("parity of P or Q violated".into());
                }
            }
            (PairData::Laurent { f, g }, Convention::WzSx) => {
                let d = self.d_plus;
                if f.degree() > d || g.degree() > d {
                    return fail(format!("deg F, deg G <= {d} violated"));
                }
                if !parity_ok(f.parity(), d as i64, f.d_max().is_none())
                    || !parity_ok(g.parity(), d as i64, g.d_max().is_none())
                {
                    return fail("parity of F or G violated".into());
                }
                if !f.is_real(1e-12) || !g.is_real(1e-12) {
                    return fail("F and G must have real coefficients".into());
                }
            }
            (PairData::Laurent { f, g }, _) => {
                let (lo, hi) = (-(self.d_minus as i64), self.d_plus as i64);
                for p in [f, g] {
                    if p.d_max().is_some_and(|k| k > hi) || p.d_min().is_some_and(|k| k < lo) {
                        return fail(format!("exponent window [{lo}, {hi}] violated"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn parity_ok(p: Parity, d: i64, is_zero: bool) -> bool {
    is_zero || p == Parity::of_degree(d)
}

fn sup_abs_cheb(f: &ChebPoly, n: usize) -> f64 {
    (0..n)
        .map(|j| {
            f.eval(((2 * j + 1) as f64 * PI / (2 * n) as f64).cos())
                .norm()
        })
        .fold(0.0, f64::max)
}

/// Replaces every group of roots within `CLUSTER_TOL` of each other that
/// satisfies `near` by `snap` of the group mean.
fn merge_clusters(
    roots: &mut [Complex64],
    near: impl Fn(Complex64) -> bool,
    snap: impl Fn(Complex64) -> Complex64,
) {
    let idx: Vec<usize> = (0..roots.len()).filter(|&i| near(roots[i])).collect();
    let mut seen = vec![false; idx.len()];
    for a in 0..idx.len() {
        if seen[a] {
            continue;
        }
        let mut group = vec![a];
        seen[a] = true;
        let mut t = 0;
        while t < group.len() {
            let ra = roots[idx[group[t]]];
            for b in 0..idx.len() {
                if !seen[b] && (roots[idx[b]] - ra).norm() <= CLUSTER_TOL * ra.norm().max(1.0) {
                    seen[b] = true;
                    group.push(b);
                }
            }
            t += 1;
        }
        if group.len() > 1 {
            let mean =
                snap(group.iter().map(|&g| roots[idx[g]]).sum::<Complex64>() / group.len() as f64);
            for &g in &group {
                roots[idx[g]] = mean;
            }
        }
    }
}

/// Groups (already merged) roots into clusters of identical value and returns
/// one representative for every two members. Odd clusters are an error.
fn halve_multiplicity(mut roots: Vec<Complex64>) -> Result<Vec<Complex64>> {
    roots.sort_by(|a, b| {
        a.arg()
            .partial_cmp(&b.arg())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = Vec::new();
    let mut i = 0;
    while i < roots.len() {
        let mut j = i + 1;
        while j < roots.len() && (roots[j] - roots[i]).norm() <= CLUSTER_TOL {
            j += 1;
        }
        let size = j - i;
        if size % 2 == 1 {
            return Err(QspError::Classification(format!(
                "boundary root {:.6} has odd multiplicity {size}",
                roots[i]
            )));
        }
        out.extend(std::iter::repeat_n(roots[i], size / 2));
        i = j;
    }
    Ok(out)
}

// ---------------------------------------------------------------- (Wx, Sz)

/// `p + i q sqrt(1 - x^2)` with real `p`, `q`.
#[derive(Debug, Clone)]
struct SqrtPoly {
    p: ChebPoly,
    q: ChebPoly,
}

impl SqrtPoly {
    fn conj(&self) -> SqrtPoly {
        SqrtPoly {
            p: self.p.clone(),
            q: self.q.scale(Complex64::new(-1.0, 0.0)),
        }
    }

    fn at(&self, w: Complex64) -> Complex64 {
        let x = (w + w.inv()) * 0.5;
        let s = (w - w.inv()) * Complex64::new(0.0, -0.5);
        self.p.eval_complex(x) + I * self.q.eval_complex(x) * s
    }

    /// Product of `factors` of total degree `deg`, sampled at `w` on the unit
    /// circle (where `sqrt(1 - x^2) = (w - 1/w) / 2i`) and split back into
    /// the symmetric and antisymmetric parts under `w -> 1/w`.
    fn product(factors: &[SqrtPoly], deg: usize) -> Result<SqrtPoly> {
        let n = (2 * deg + 2).next_power_of_two();
        let samples: Vec<Complex64> = circle_grid(n)
            .map(|w| factors.iter().map(|f| f.at(w)).product())
            .collect();
        let c = fourier_coeffs(&samples)?;
        let k = |j: usize| coefficient(&c, j as i64);
        let km = |j: usize| coefficient(&c, -(j as i64));
        let cheb: Vec<Complex64> = (0..=deg)
            .map(|j| if j == 0 { k(0) } else { k(j) + km(j) })
            .collect();
        let u: Vec<Complex64> = (1..=deg).map(|j| k(j) - km(j)).collect();
        Ok(SqrtPoly {
            p: ChebPoly::new(cheb).real_part(),
            q: ChebPoly::from_chebyshev_u(&u).real_part(),
        })
    }

    fn abs_sqr(&self, x: f64) -> f64 {
        self.p.eval(x).norm_sqr() + (1.0 - x * x) * self.q.eval(x).norm_sqr()
    }
}

/// `R_1(x; s) = sqrt|s-1| x + i sqrt|s| sqrt(1-x^2)`.
fn r1(s: f64) -> SqrtPoly {
    SqrtPoly {
        p: ChebPoly::from_real(&[0.0, (s - 1.0).abs().sqrt()]),
        q: ChebPoly::from_real(&[s.abs().sqrt()]),
    }
}

/// `R_2(x; s) = (|s-1| + |s|) x^2 - |s| + i sqrt((|s-1| + |s|)^2 - 1) x sqrt(1-x^2)`.
fn r2(s: Complex64) -> SqrtPoly {
    let a = (s - 1.0).norm() + s.norm();
    SqrtPoly {
        p: ChebPoly::from_real(&[a / 2.0 - s.norm(), 0.0, a / 2.0]),
        q: ChebPoly::from_real(&[0.0, (a * a - 1.0).max(0.0).sqrt()]),
    }
}

/// Completion for `(W_x, S_z)`-QSP by root finding.
///
/// `f` is a real Chebyshev series with parity `d mod 2`; returns `P = f + i P'`,
/// `Q = i Q'` with `B = P' + i Q' sqrt(1 - x^2)` and `|B|^2 = 1 - f^2`. The roots
/// of `1 - f^2` are found in `w` (with `x = (w + 1/w)/2`) and mapped to `y = x^2`.
pub fn complete_wx_rootfind(f: &ChebPoly, d: usize, choice: RootChoice) -> Result<CompletionPair> {
    if f.coeffs().iter().any(|c| c.im.abs() > 1e-14) {
        return Err(QspError::Precondition(
            "target must have real coefficients".into(),
        ));
    }
    let f = f.real_part();
    let l = f.degree().unwrap_or(0);
    if l > d {
        return Err(QspError::Precondition(format!(
            "deg f = {l} exceeds d = {d}"
        )));
    }
    if f.degree().is_some() && f.parity() != Parity::of_degree(d as i64) {
        return Err(QspError::Precondition(format!(
            "parity of f does not match d = {d}"
        )));
    }
    let sup = sup_abs_cheb(&f, sup_samples(d));
    if sup > 1.0 + 1e-12 {
        return Err(QspError::Precondition(format!("sup |f| = {sup} exceeds 1")));
    }
    let f = f.resized(l + 1);
    let a = ChebPoly::constant(ONE)
        .sub(&f.mul(&f))
        .real_part()
        .project_parity(Parity::Even);
    let mut rng = choice.rng();
    let mut factors = Vec::new();
    let mut deg_b = 0usize;
    let la = a.degree().unwrap_or(0);
    if la > 0 {
        let (inside, boundary) = wx_root_classes(&a, la)?;
        let real = |s: Complex64| s.im.abs() <= CLASSIFY_TOL * s.norm().max(1.0);
        let mut interior = Vec::new();
        for s in inside {
            let mut factor = if real(s) {
                if s.re > CLASSIFY_TOL && s.re < 1.0 - CLASSIFY_TOL {
                    return Err(QspError::Classification(format!(
                        "unpaired root y = {:.6} inside (0, 1)",
                        s.re
                    )));
                }
                deg_b += 1;
                r1(s.re)
            } else if s.im > 0.0 {
                deg_b += 2;
                r2(s)
            } else {
                continue;
            };
            if rng.as_mut().is_some_and(|r| r.random_bool(0.5)) {
                factor = factor.conj();
            }
            factors.push(factor);
        }
        for y in boundary {
            if y <= CLASSIFY_TOL || y >= 1.0 - CLASSIFY_TOL {
                deg_b += 1;
                factors.push(r1(y));
            } else {
                interior.push(Complex64::new(y, 0.0));
            }
        }
        for s in halve_multiplicity(interior)? {
            deg_b += 2;
            factors.push(SqrtPoly {
                p: ChebPoly::from_real(&[0.5 - s.re, 0.0, 0.5]),
                q: ChebPoly::zero(),
            });
        }
    }
    if deg_b % 2 != d % 2 {
        deg_b += 1;
        factors.push(SqrtPoly {
            p: ChebPoly::x(),
            q: ChebPoly::from_real(&[1.0]),
        });
    }
    let b = SqrtPoly::product(&factors, deg_b)?;
    let av = |x: f64| a.eval(x).re;
    let mut x0 = NORM_ANGLE.cos();
    if av(x0) < 1e-8 {
        x0 = (0..64)
            .map(|j| ((2 * j + 1) as f64 * PI / 128.0).cos())
            .max_by(|u, v| {
                av(*u)
                    .partial_cmp(&av(*v))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(x0);
    }
    let denom = b.abs_sqr(x0);
    if !(denom > 0.0) {
        return Err(QspError::Classification(
            "partner polynomial vanishes at the normalization point".into(),
        ));
    }
    let c = Complex64::new((av(x0).max(0.0) / denom).sqrt(), 0.0);
    let bp = b.p.scale(c).real_part();
    let bq = b.q.scale(c).real_part();
    let p = f.add(&bp.scale(I)).resized(d + 1);
    let q = bq.scale(I).resized(d.max(1));
    rootfind_checked(CompletionPair::wx(p, q, d))
}

/// Roots of the even series `a` (degree `la`) expressed in `y = x^2`: values
/// from roots of `w^la a(w)` strictly inside the unit disc (one per `+-w` pair),
/// and real values in `[0, 1]` from unit-circle roots (one per group of four).
fn wx_root_classes(a: &ChebPoly, la: usize) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let aw = a.to_laurent().with_window(-(la as i64), la as i64);
    let mut roots = all_roots(aw.coeffs())?.roots;
    merge_clusters(
        &mut roots,
        |s| (s.norm() - 1.0).abs() <= CLUSTER_TOL,
        |s| s / s.norm(),
    );
    let to_y = |w: Complex64| {
        let x = (w + w.inv()) * 0.5;
        x * x
    };
    let mut inside = Vec::new();
    let mut boundary = Vec::new();
    for w in roots {
        if (w.norm() - 1.0).abs() <= CLASSIFY_TOL {
            boundary.push(to_y(w).re.clamp(0.0, 1.0));
        } else if w.norm() < 1.0 {
            if w.norm() == 0.0 {
                return Err(QspError::Classification("root at w = 0".into()));
            }
            let upper = if w.re.abs() > 1e-8 * w.norm() {
                w.re > 0.0
            } else {
                w.im > 0.0
            };
            if upper {
                inside.push(to_y(w));
            }
        }
    }
    if boundary.len() % 4 != 0 {
        return Err(QspError::Classification(format!(
            "{} unit-circle roots do not group into fours",
            boundary.len()
        )));
    }
    boundary.sort_by(|u, v| u.partial_cmp(v).unwrap_or(std::cmp::Ordering::Equal));
    let boundary = boundary
        .chunks(4)
        .map(|c| c.iter().sum::<f64>() / 4.0)
        .collect();
    Ok((inside, boundary))
}

// ---------------------------------------------------------------- (Wz, Sx)

/// `1 - f(w) f*(1/w)`.
fn one_minus_abs_sqr(f: &LaurentPoly) -> LaurentPoly {
    LaurentPoly::constant(ONE).sub(&f.mul(&f.star_inverse()))
}

/// `G0` scaled so `|G(w0)|^2 = a(w0)`, falling back to the grid point where `a` is largest.
fn normalize_partner(g0: LaurentPoly, a: &LaurentPoly) -> Result<LaurentPoly> {
    let eval_a = |t: f64| a.eval_unchecked(Complex64::from_polar(1.0, t)).re;
    let mut t0 = NORM_ANGLE;
    if eval_a(t0) < 1e-8 {
        t0 = (0..256)
            .map(|j| 2.0 * PI * (j as f64 + 0.37) / 256.0)
            .max_by(|u, v| {
                eval_a(*u)
                    .partial_cmp(&eval_a(*v))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(t0);
    }
    let denom = g0.eval_unchecked(Complex64::from_polar(1.0, t0)).norm_sqr();
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(QspError::Classification(
            "partner polynomial vanishes at the normalization point".into(),
        ));
    }
    Ok(g0.scale(Complex64::new((eval_a(t0).max(0.0) / denom).sqrt(), 0.0)))
}

/// Monic polynomial with the given roots, as a Laurent polynomial starting at `w^lo`.
/// The product is sampled on the unit circle and transformed back.
fn from_roots(roots: &[Complex64], lo: i64) -> Result<LaurentPoly> {
    let n = (roots.len() + 1).next_power_of_two();
    let samples: Vec<Complex64> = circle_grid(n)
        .map(|w| roots.iter().map(|s| w - s).product())
        .collect();
    let mut c = fourier_coeffs(&samples)?;
    c.truncate(roots.len() + 1);
    Ok(LaurentPoly::new(lo, c))
}

fn check_wz_target(f: &LaurentPoly, d: usize) -> Result<usize> {
    if !f.is_real(1e-14) {
        return Err(QspError::Precondition(
            "target must have real coefficients".into(),
        ));
    }
    let l = f.degree();
    if l > d {
        return Err(QspError::Precondition(format!(
            "deg f = {l} exceeds d = {d}"
        )));
    }
    if f.d_max().is_some() && f.parity() != Parity::of_degree(d as i64) {
        return Err(QspError::Precondition(format!(
            "parity of f does not match d = {d}"
        )));
    }
    let sup = f.sup_on_circle(sup_samples(d));
    if sup > 1.0 + 1e-12 {
        return Err(QspError::Precondition(format!("sup |f| = {sup} exceeds 1")));
    }
    Ok(l)
}

/// Keys in-disc roots by the orbit `{s, -s, s*, -s*}` for joint reflection.
fn orbit_key(s: Complex64) -> (i64, i64) {
    let q = 1e6;
    (
        (s.re.abs() * q).round() as i64,
        (s.im.abs() * q).round() as i64,
    )
}

fn reflect_orbits(inside: &mut [Complex64], rng: &mut ChaCha8Rng, by_orbit: bool) {
    let mut decided: Vec<((i64, i64), bool)> = Vec::new();
    for s in inside.iter_mut() {
        if s.norm() == 0.0 {
            continue;
        }
        let flip = if by_orbit {
            let key = orbit_key(*s);
            match decided.iter().find(|(k, _)| *k == key) {
                Some((_, f)) => *f,
                None => {
                    let f = rng.random_bool(0.5);
                    decided.push((key, f));
                    f
                }
            }
        } else {
            rng.random_bool(0.5)
        };
        if flip {
            *s = s.conj().inv();
        }
    }
}

/// Completion for `(W_z, S_x)`-QSP by root finding: `F = f`, `G` from the
/// in-disc roots and half of the unit-circle roots of `w^{2l} (1 - f^2)`.
pub fn complete_wz_rootfind(
    f: &LaurentPoly,
    d: usize,
    choice: RootChoice,
) -> Result<CompletionPair> {
    let l = check_wz_target(f, d)?;
    let f = f.real_part().with_window(-(l as i64), l as i64);
    if f.d_max().is_none() {
        return Ok(CompletionPair::wz(
            f,
            LaurentPoly::monomial(d as i64, ONE),
            d,
        ));
    }
    let a = one_minus_abs_sqr(&f).real_part();
    let g0 = if l == 0 {
        LaurentPoly::constant(ONE)
    } else {
        let poly = a.with_window(-2 * l as i64, 2 * l as i64);
        let mut roots = all_roots(poly.coeffs())?.roots;
        merge_clusters(
            &mut roots,
            |s| (s.norm() - 1.0).abs() <= CLUSTER_TOL,
            |s| s / s.norm(),
        );
        let on_circle = |s: Complex64| (s.norm() - 1.0).abs() <= CLASSIFY_TOL;
        let mut inside: Vec<Complex64> = roots
            .iter()
            .copied()
            .filter(|&s| !on_circle(s) && s.norm() < 1.0)
            .collect();
        let unit: Vec<Complex64> = roots.iter().copied().filter(|&s| on_circle(s)).collect();
        if let Some(mut rng) = choice.rng() {
            reflect_orbits(&mut inside, &mut rng, true);
        }
        inside.extend(halve_multiplicity(unit)?);
        from_roots(&inside, -(l as i64))?
    };
    let mut g = normalize_partner(g0, &a)?
        .real_part()
        .project_parity(Parity::of_degree(l as i64));
    if l % 2 != d % 2 {
        g = g.shift(1);
    }
    rootfind_checked(CompletionPair::wz(f, g, d))
}

/// `h_hat_{-1} ..= h_hat_{-count}` of `h = 1 / (1 - |f|^2)`.
fn reciprocal_coefficients(f: &LaurentPoly, count: usize, degree: usize) -> Result<Vec<Complex64>> {
    let ks: Vec<i64> = (1..=count as i64).map(|k| -k).collect();
    let h = |w: Complex64| -> Result<Complex64> {
        let v = f.eval_unchecked(w).norm_sqr();
        if v >= 1.0 - SINGULAR_TOL {
            return Err(QspError::Singularity { max_abs: v.sqrt() });
        }
        Ok(Complex64::new(1.0 / (1.0 - v), 0.0))
    };
    Ok(fourier_coeffs_adaptive(h, &ks, 8 * (degree + 1))?.0)
}

/// Completion for `(W_z, S_x)`-QSP by Prony's method.
pub fn complete_wz_prony(f: &LaurentPoly, d: usize) -> Result<CompletionPair> {
    let l = check_wz_target(f, d)?;
    let f = f.real_part().with_window(-(l as i64), l as i64);
    if f.d_max().is_none() {
        return Ok(CompletionPair::wz(
            f,
            LaurentPoly::monomial(d as i64, ONE),
            d,
        ));
    }
    let a = one_minus_abs_sqr(&f).real_part();
    let g0 = if l == 0 {
        LaurentPoly::constant(ONE)
    } else {
        // h is even in w, so the recurrence runs over y = w^2 with l + 1 unknowns
        let cols = l + 1;
        let hneg: Vec<Complex64> = reciprocal_coefficients(&f, 6 * cols, 2 * l)?
            .into_iter()
            .skip(1)
            .step_by(2)
            .collect();
        let nv = prony_null_vector(&hneg, cols)?;
        if nv.is_ambiguous() {
            return Err(QspError::DegenerateNullSpace(format!(
                "singular value ratio {:.3} exceeds 0.5; apply the stability split",
                nv.ratio
            )));
        }
        let k = (0..cols)
            .max_by(|&i, &j| {
                nv.m[i]
                    .norm()
                    .partial_cmp(&nv.m[j].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let phase = nv.m[k].conj() / nv.m[k].norm();
        let mut m = vec![ZERO; 2 * l + 1];
        for (i, c) in nv.m.iter().enumerate() {
            m[2 * i] = Complex64::new((c * phase).re, 0.0);
        }
        LaurentPoly::new(-(l as i64), m)
    };
    let mut g = normalize_partner(g0, &a)?
        .real_part()
        .project_parity(Parity::of_degree(l as i64));
    if l % 2 != d % 2 {
        g = g.shift(1);
    }
    prony_checked(CompletionPair::wz(f, g, d))
}

// ---------------------------------------------------------------- GQSP

fn check_gqsp_target(f: &LaurentPoly, d_plus: usize, d_minus: usize, strict: bool) -> Result<()> {
    let (lo, hi) = (-(d_minus as i64), d_plus as i64);
    if f.d_max().is_some_and(|k| k > hi) || f.d_min().is_some_and(|k| k < lo) {
        return Err(QspError::Precondition(format!(
            "target exponents exceed [{lo}, {hi}]"
        )));
    }
    let sup = f.sup_on_circle(sup_samples(d_plus + d_minus));
    if sup >= 1.0 && strict || sup > 1.0 + 1e-12 {
        return Err(QspError::Precondition(format!(
            "sup |f| = {sup} is not below 1"
        )));
    }
    Ok(())
}

/// Completion for GQSP by root finding on `w^D (1 - F F*(1/w))`.
pub fn complete_gqsp_rootfind(
    f: &LaurentPoly,
    d_plus: usize,
    d_minus: usize,
    choice: RootChoice,
) -> Result<CompletionPair> {
    check_gqsp_target(f, d_plus, d_minus, true)?;
    let ft = f.trimmed(TRIM_EPS);
    let f_out = f.with_window(-(d_minus as i64), d_plus as i64);
    let (Some(lo), Some(hi)) = (ft.d_min(), ft.d_max()) else {
        return Ok(CompletionPair::gqsp(
            f_out,
            LaurentPoly::constant(ONE),
            d_plus,
            d_minus,
        ));
    };
    let span = (hi - lo) as usize;
    let g_fn = one_minus_abs_sqr(&ft);
    let g0 = if span == 0 {
        LaurentPoly::monomial(lo, ONE)
    } else {
        let poly = g_fn.with_window(-(span as i64), span as i64);
        let roots = all_roots(poly.coeffs())?.roots;
        if let Some(s) = roots.iter().find(|s| (s.norm() - 1.0).abs() <= 1e-8) {
            return Err(QspError::Classification(format!(
                "root {s:.6} lies on the unit circle; |f| reaches 1"
            )));
        }
        let mut inside: Vec<Complex64> = roots.into_iter().filter(|s| s.norm() < 1.0).collect();
        if let Some(mut rng) = choice.rng() {
            reflect_orbits(&mut inside, &mut rng, false);
        }
        from_roots(&inside, lo)?
    };
    let g = normalize_partner(g0, &g_fn)?;
    rootfind_checked(CompletionPair::gqsp(f_out, g, d_plus, d_minus))
}

/// Completion for GQSP by Prony's method.
pub fn complete_gqsp_prony(
    f: &LaurentPoly,
    d_plus: usize,
    d_minus: usize,
) -> Result<CompletionPair> {
    check_gqsp_target(f, d_plus, d_minus, true)?;
    let ft = f.trimmed(TRIM_EPS);
    let f_out = f.with_window(-(d_minus as i64), d_plus as i64);
    let (Some(lo), Some(hi)) = (ft.d_min(), ft.d_max()) else {
        return Ok(CompletionPair::gqsp(
            f_out,
            LaurentPoly::constant(ONE),
            d_plus,
            d_minus,
        ));
    };
    let span = (hi - lo) as usize;
    let g_fn = one_minus_abs_sqr(&ft);
    let g0 = if span == 0 {
        LaurentPoly::monomial(lo, ONE)
    } else {
        let cols = span + 1;
        let hneg = reciprocal_coefficients(&ft, 3 * cols, span)?;
        let nv = prony_null_vector(&hneg, cols)?;
        if nv.is_ambiguous() {
            return Err(QspError::DegenerateNullSpace(format!(
                "singular value ratio {:.3} exceeds 0.5; apply the stability split",
                nv.ratio
            )));
        }
        LaurentPoly::new(lo, nv.m)
    };
    let g = normalize_partner(g0, &g_fn)?;
    prony_checked(CompletionPair::gqsp(f_out, g, d_plus, d_minus))
}

/// `f = beta (f1 + f2)` with `f1 = gamma (w^{d+} + w^{-d-})`. Both parts keep
/// large extreme coefficients, which keeps the Prony system full rank. For a real
/// target with `d_plus = d_minus` the parts are again real with the same parity.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySplit {
    pub f1: LaurentPoly,
    pub f2: LaurentPoly,
    pub beta: f64,
    pub gamma: f64,
}

pub const SPLIT_GAMMA: f64 = 0.25;
pub const SPLIT_BETA: f64 = 2.0;

pub fn stability_split(f: &LaurentPoly, d_plus: usize, d_minus: usize) -> StabilitySplit {
    let (lo, hi) = (-(d_minus as i64), d_plus as i64);
    let g = Complex64::new(SPLIT_GAMMA, 0.0);
    let f1 = LaurentPoly::monomial(hi, g)
        .add(&LaurentPoly::monomial(lo, g))
        .with_window(lo, hi);
    let f2 = f
        .scale(Complex64::new(1.0 / SPLIT_BETA, 0.0))
        .sub(&f1)
        .with_window(lo, hi);
    StabilitySplit {
        f1,
        f2,
        beta: SPLIT_BETA,
        gamma: SPLIT_GAMMA,
    }
}

/// Maps a `(W_z, S_x)` pair to the `(W_x, S_z)` pair realized by the same angles.
pub fn wz_pair_to_wx(pair: &CompletionPair) -> Result<CompletionPair> {
    let (f, g) = pair
        .laurent()
        .filter(|_| pair.convention == Convention::WzSx)
        .ok_or_else(|| QspError::Argument("expected a (Wz, Sx) pair".into()))?;
    let d = pair.d_plus;
    let half = Complex64::new(0.5, 0.0);
    let sym = f
        .add(&f.reflect())
        .scale(half)
        .add(&g.add(&g.reflect()).scale(half * I));
    let p = ChebPoly::new(laurent_to_chebyshev(
        &sym.with_window(-(d as i64), d as i64),
    )?);
    // A = F(w) - F(1/w) - i G(w) + i G(1/w) = sum_k a_k w^k, Q = sum_{k>0} a_k U_{k-1}
    let a = f.sub(&f.reflect()).sub(&g.sub(&g.reflect()).scale(I));
    let u: Vec<Complex64> = (1..=d as i64).map(|k| a.coeff(k)).collect();
    let q = if u.is_empty() {
        ChebPoly::zero()
    } else {
        ChebPoly::from_chebyshev_u(&u)
    };
    Ok(CompletionPair::wx(p.resized(d + 1), q.resized(d.max(1)), d))
}

/// Maps a `(W_x, S_z)` pair to the `(W_z, S_x)` pair realized by the same angles:
/// `F = Re P + Re Q (w - 1/w)/2`, `G = Im P - Im Q (w - 1/w)/2`, coefficient-wise.
pub fn wx_pair_to_wz(pair: &CompletionPair) -> Result<CompletionPair> {
    let (p, q) = pair
        .wx_polys()
        .ok_or_else(|| QspError::Argument("expected a (Wx, Sz) pair".into()))?;
    let d = pair.d_plus as i64;
    let s = LaurentPoly::new(-1, vec![c64(-0.5), ZERO, c64(0.5)]);
    let half = |a: ChebPoly, b: ChebPoly, sign: f64| {
        a.to_laurent()
            .add(&b.to_laurent().mul(&s).scale(c64(sign)))
            .real_part()
            .with_window(-d, d)
    };
    let f = half(p.real_part(), q.real_part(), 1.0);
    let g = half(p.imag_part(), q.imag_part(), -1.0);
    Ok(CompletionPair::wz(f, g, pair.d_plus))
}

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Adds `eps_cap (w^d + w^{-d})` to a `(W_z, S_x)` target.
pub fn capitalize(f: &LaurentPoly, d: usize, eps_cap: f64) -> LaurentPoly {
    let e = Complex64::new(eps_cap, 0.0);
    f.add(&LaurentPoly::monomial(d as i64, e))
        .add(&LaurentPoly::monomial(-(d as i64), e))
}
