//! Decomposition: turn a certified pair into an angle sequence.
//!
//! Ordinary QSP supports carving (peel one layer at a time from the top) and
//! halving (split the product into two halves by a linear solve). GQSP is
//! carved after shifting the exponent window to start at zero.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::completion::{
    capitalize, complete_wz_rootfind, wx_pair_to_wz, wz_pair_to_wx, CompletionPair, RootChoice,
};
use crate::error::{QspError, Result};
use crate::laurent::LaurentPoly;
use crate::numlin::fourier::{circle_grid, coefficient, fourier_coeffs};
use crate::numlin::linsolve::{solve_linear, CMatrix};
use crate::qspmodel::{AngleSequence, Convention, Point};
use crate::target::sup_samples;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Leading coefficients below this count as vanished.
pub const LEAD_TOL: f64 = 1e-13;

/// A decomposed sequence with its reconstruction residual
/// `max |U_sequence - U_pair|` over the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposed {
    pub sequence: AngleSequence,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decomposer {
    Carving,
    Halving,
    /// Halving after adding `eps_cap` to the extreme coefficients of `F`.
    CapHalving(f64),
}

impl Decomposer {
    pub fn tag(self) -> &'static str {
        match self {
            Decomposer::Carving => "c",
            Decomposer::Halving => "h",
            Decomposer::CapHalving(_) => "ch",
        }
    }
}

/// Dispatches on the pair's convention.
pub fn decompose(pair: &CompletionPair, how: Decomposer) -> Result<Decomposed> {
    match (pair.convention, how) {
        (Convention::WxSz, Decomposer::Carving) => decompose_wx_carving(pair),
        (Convention::WxSz, Decomposer::Halving) => decompose_wx_halving(pair),
        (Convention::WzSx, Decomposer::Halving) => decompose_wz_halving(pair, None),
        (Convention::WzSx, Decomposer::CapHalving(eps)) => decompose_wz_halving(pair, Some(eps)),
        (Convention::Gqsp, Decomposer::Carving) => decompose_gqsp_carving(pair),
        (c, h) => Err(QspError::Unsupported(format!(
            "{c} pairs cannot be decomposed by {h:?}"
        ))),
    }
}

/// `max |U_sequence - U_pair|` over the sample grid; GQSP compares the top row only.
pub fn reconstruction_residual(seq: &AngleSequence, pair: &CompletionPair) -> Result<f64> {
    let n = sup_samples(pair.degree());
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let theta = match pair.convention {
            Convention::WxSz => (2 * j + 1) as f64 * PI / (2 * n) as f64,
            _ => 2.0 * PI * (j as f64 + 0.5) / n as f64,
        };
        let u = seq.eval(seq.point_at(theta))?;
        let v = pair.matrix_at(theta);
        let err = match pair.convention {
            Convention::Gqsp => (u.a - v.a).norm().max((u.b - v.b).norm()),
            _ => u.max_abs_diff(&v),
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

fn finish(seq: AngleSequence, pair: &CompletionPair) -> Result<Decomposed> {
    let residual = reconstruction_residual(&seq, pair)?;
    Ok(Decomposed {
        sequence: seq,
        residual,
    })
}

fn expect(pair: &CompletionPair, conv: Convention) -> Result<()> {
    if pair.convention == conv {
        Ok(())
    } else {
        Err(QspError::Argument(format!(
            "expected a {conv} pair, got {}",
            pair.convention
        )))
    }
}

/// Carving for `(W_x, S_z)`: each step multiplies by `S_z(-phi) W_x^dagger`
/// with `e^{2 i phi} = p_d / q_{d-1}`, lowering both degrees by one.
pub fn decompose_wx_carving(pair: &CompletionPair) -> Result<Decomposed> {
    expect(pair, Convention::WxSz)?;
    let (p0, q0) = pair
        .wx_polys()
        .ok_or_else(|| QspError::Argument("missing P, Q".into()))?;
    let d = pair.d_plus;
    let mut phi = vec![0.0; d + 1];
    let mut p = p0.resized(d + 1);
    let mut q = q0.resized(d.max(1));
    let mut k = d;
    while k > 0 {
        let (cp, cq) = (p.coeff(k), q.coeff(k - 1));
        match (cp.norm() < LEAD_TOL, cq.norm() < LEAD_TOL) {
            (true, true) if k >= 2 => {
                // W_x S_z(pi/2) W_x S_z(-pi/2) = I
                phi[k] = -FRAC_PI_2;
                phi[k - 1] = FRAC_PI_2;
                p = p.resized(k - 1);
                q = q.resized((k - 2).max(1));
                k -= 2;
                continue;
            }
            (true, true) if p.max_abs_coeff() < LEAD_TOL && q.max_abs_coeff() < LEAD_TOL => {
                return Err(QspError::Degenerate {
                    step: k,
                    reason: "P and Q vanish".into(),
                })
            }
            _ => {}
        }
        let r = p.leading_monomial(k) / q.leading_monomial(k - 1);
        let r = if r.norm().is_normal() {
            r / r.norm()
        } else {
            ONE
        };
        let ph = r.arg() / 2.0;
        let e = Complex64::from_polar(1.0, -ph);
        let np = p.mul_x().add(&q.mul_one_minus_x2().scale(r)).scale(e);
        let nq = q.mul_x().scale(r).sub(&p).scale(e);
        phi[k] = ph;
        p = np.resized(k);
        q = nq.resized((k - 1).max(1));
        k -= 1;
    }
    phi[0] = p.coeff(0).arg();
    finish(AngleSequence::ordinary(Convention::WxSz, phi)?, pair)
}

/// Halving for `(W_x, S_z)` through the `(W_z, S_x)` pair with the same angles.
pub fn decompose_wx_halving(pair: &CompletionPair) -> Result<Decomposed> {
    expect(pair, Convention::WxSz)?;
    let wz = wx_pair_to_wz(pair)?;
    let (f, g) = wz.laurent().unwrap();
    let phi = halve(f, g, wz.d_plus)?;
    finish(AngleSequence::ordinary(Convention::WxSz, phi)?, pair)
}

/// Halving for `(W_z, S_x)`. With `eps_cap`, `F` is capitalized and the pair
/// completed again by root finding before halving.
pub fn decompose_wz_halving(pair: &CompletionPair, eps_cap: Option<f64>) -> Result<Decomposed> {
    expect(pair, Convention::WzSx)?;
    let capped;
    let work = match eps_cap {
        Some(eps) => {
            let f = pair.laurent().unwrap().0;
            capped = complete_wz_rootfind(
                &capitalize(f, pair.d_plus, eps),
                pair.d_plus,
                RootChoice::Deterministic,
            )?;
            &capped
        }
        None => pair,
    };
    let (f, g) = work.laurent().unwrap();
    let phi = halve(f, g, work.d_plus)?;
    finish(AngleSequence::ordinary(Convention::WzSx, phi)?, work)
}

fn effective_degree(f: &LaurentPoly, g: &LaurentPoly, d: usize) -> usize {
    let e = f
        .terms()
        .chain(g.terms())
        .filter(|(k, c)| c.norm() > LEAD_TOL && k.unsigned_abs() as usize <= d)
        .map(|(k, _)| k.unsigned_abs() as usize)
        .max()
        .unwrap_or(d % 2);
    if (d - e) % 2 == 1 {
        e + 1
    } else {
        e
    }
}

/// Angles of a real-coefficient `(F, G)` pair of degree `d` in `(W_z, S_x)`.
fn halve(f: &LaurentPoly, g: &LaurentPoly, d: usize) -> Result<Vec<f64>> {
    let e = effective_degree(f, g, d);
    if e < d {
        let mut phi = halve(f, g, e)?;
        for _ in 0..(d - e) / 2 {
            phi.extend([FRAC_PI_2, -FRAC_PI_2]);
        }
        return Ok(phi);
    }
    match d {
        0 => Ok(vec![g.coeff(0).re.atan2(f.coeff(0).re)]),
        1 => {
            let sum = (f.eval_unchecked(ONE) + I * g.eval_unchecked(ONE)).arg();
            let diff = (f.eval_unchecked(I) - I * g.eval_unchecked(I)).arg() - FRAC_PI_2;
            Ok(vec![(sum + diff) / 2.0, (sum - diff) / 2.0])
        }
        _ => {
            let l = d / 2;
            let (f1, g1) = halving_factor(f, g, d, l)?;
            let r = (d - l) as i64;
            let f1r = f1.reflect();
            let f2 = f1r
                .mul(f)
                .add(&g1.mul(&g.reflect()))
                .real_part()
                .with_window(-r, r);
            let g2 = f1r
                .mul(g)
                .sub(&g1.mul(&f.reflect()))
                .real_part()
                .with_window(-r, r);
            let mut phi = halve(&f1, &g1, l)?;
            let tail = halve(&f2, &g2, d - l)?;
            phi[l] += tail[0];
            phi.extend_from_slice(&tail[1..]);
            Ok(phi)
        }
    }
}

/// Solves for the left factor `(F_1, G_1)` of degree `l` such that
/// `A^dagger U` has degree `d - l`, normalized by `F_1(1) = 1`, `G_1(1) = 0`.
fn halving_factor(
    f: &LaurentPoly,
    g: &LaurentPoly,
    d: usize,
    l: usize,
) -> Result<(LaurentPoly, LaurentPoly)> {
    let (d, l) = (d as i64, l as i64);
    let nk = (l + 1) as usize;
    let exps: Vec<i64> = (0..=l).map(|i| -l + 2 * i).collect();
    let ks: Vec<i64> = (d - l + 2..=d + l)
        .step_by(2)
        .flat_map(|k| [k, -k])
        .collect();
    let rows = 2 * ks.len() + 2;
    let mut a = CMatrix::zeros(rows, 2 * nk);
    for (r, &k) in ks.iter().enumerate() {
        for (j, &k1) in exps.iter().enumerate() {
            a.set(2 * r, j, f.coeff(k + k1));
            a.set(2 * r, nk + j, g.coeff(k1 - k));
            a.set(2 * r + 1, j, g.coeff(k + k1));
            a.set(2 * r + 1, nk + j, -f.coeff(k1 - k));
        }
    }
    let mut b = vec![ZERO; rows];
    for j in 0..nk {
        a.set(rows - 2, j, ONE);
        a.set(rows - 1, nk + j, ONE);
    }
    b[rows - 2] = ONE;
    let sol = solve_linear(&a, &b).map_err(|e| match e {
        QspError::RankDeficient { ratio } => QspError::HalvingInstability {
            degree: d as usize,
            reason: format!("pivot ratio {ratio:.3e}"),
        },
        other => other,
    })?;
    let spread = |off: usize| {
        let mut c = vec![ZERO; (2 * l + 1) as usize];
        for i in 0..nk {
            c[2 * i] = Complex64::new(sol.x[off + i].re, 0.0);
        }
        LaurentPoly::new(-l, c)
    };
    Ok((spread(0), spread(nk)))
}

/// Carving for GQSP: after multiplying by `w^{d_-}` every signal step is `W_0`.
pub fn decompose_gqsp_carving(pair: &CompletionPair) -> Result<Decomposed> {
    expect(pair, Convention::Gqsp)?;
    let (f0, g0) = pair.laurent().unwrap();
    let (dp, dm) = (pair.d_plus, pair.d_minus);
    let total = dp + dm;
    let mut f = f0.shift(dm as i64).with_window(0, total as i64);
    let mut g = g0.shift(dm as i64).with_window(0, total as i64);
    let mut theta = vec![0.0; total + 1];
    let mut phi = vec![0.0; total + 1];
    for n in (1..=total).rev() {
        let top = (f.coeff(n as i64), g.coeff(n as i64));
        let bottom = (f.coeff(0), g.coeff(0));
        let size = |(a, b): (Complex64, Complex64)| a.norm() + b.norm();
        if size(top).max(size(bottom)) < LEAD_TOL
            && f.max_abs_coeff().max(g.max_abs_coeff()) < LEAD_TOL
        {
            return Err(QspError::Degenerate {
                step: n,
                reason: "F and G vanish".into(),
            });
        }
        // vanishing extremes take the theta = 0 branch
        let (a, b) = if size(top).max(size(bottom)) < LEAD_TOL {
            (ZERO, ONE)
        } else if size(top) >= size(bottom) {
            (I * top.1, top.0)
        } else {
            (bottom.0.conj(), I * bottom.1.conj())
        };
        let th = a.norm().atan2(b.norm());
        let ph = if a.norm() == 0.0 || b.norm() == 0.0 {
            0.0
        } else {
            b.arg() - a.arg()
        };
        let (s, c) = th.sin_cos();
        let e = Complex64::from_polar(1.0, -ph);
        let nf = f.scale(e * c).add(&g.scale(I * s)).shift(-1);
        let ng = f.scale(-I * e * s).sub(&g.scale(Complex64::new(c, 0.0)));
        f = nf.with_window(0, n as i64 - 1);
        g = ng.with_window(0, n as i64 - 1);
        theta[n] = th;
        phi[n] = ph;
    }
    let (fc, gc) = (f.coeff(0), g.coeff(0));
    theta[0] = gc.norm().atan2(fc.norm());
    let lambda = if gc.norm() > 0.0 { (I * gc).arg() } else { 0.0 };
    phi[0] = if fc.norm() > 0.0 {
        fc.arg() - lambda
    } else {
        0.0
    };
    finish(AngleSequence::gqsp(theta, phi, lambda, dp, dm)?, pair)
}

/// The pair a sequence implements, read off by FFT of its matrix entries.
pub fn pair_of_sequence(seq: &AngleSequence) -> Result<CompletionPair> {
    let d = seq.degree();
    if seq.convention == Convention::WxSz {
        let wz = AngleSequence::ordinary(Convention::WzSx, seq.phi.clone())?;
        return wz_pair_to_wx(&pair_of_sequence(&wz)?);
    }
    let n = (2 * d + 2).next_power_of_two().max(8);
    let mut top = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for w in circle_grid(n) {
        let u = seq.eval(Point::W(w / w.norm()))?;
        top.push(u.a);
        right.push(-I * u.b);
    }
    let (cf, cg) = (fourier_coeffs(&top)?, fourier_coeffs(&right)?);
    let (lo, hi) = match seq.convention {
        Convention::Gqsp => (-(seq.d_minus as i64), seq.d_plus as i64),
        _ => (-(d as i64), d as i64),
    };
    let window =
        |c: &[Complex64]| LaurentPoly::new(lo, (lo..=hi).map(|k| coefficient(c, k)).collect());
    let (f, g) = (window(&cf), window(&cg));
    Ok(match seq.convention {
        Convention::Gqsp => CompletionPair::gqsp(f, g, seq.d_plus, seq.d_minus),
        _ => CompletionPair::wz(f.real_part(), g.real_part(), d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::{complete_gqsp_prony, complete_wx_rootfind, stability_split};
    use crate::laurent::ChebPoly;
    use crate::target::{jacobi_anger_laurent, partition, Normalization};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn wx_carving_base_cases() {
        let pair = CompletionPair::wx(ChebPoly::x(), ChebPoly::from_real(&[1.0]), 1);
        let out = decompose_wx_carving(&pair).unwrap();
        assert!(close(&out.sequence.phi, &[0.0, 0.0], 1e-15));
        let e = Complex64::from_polar(1.0, PI / 3.0);
        let out = decompose_wx_carving(&CompletionPair::wx(
            ChebPoly::constant(e),
            ChebPoly::zero(),
            0,
        ))
        .unwrap();
        assert!(close(&out.sequence.phi, &[PI / 3.0], 1e-15));
        assert!(out.residual < 1e-15);
    }

    #[test]
    fn wx_carving_pads_low_degree_pairs() {
        let pair = CompletionPair::wx(ChebPoly::x(), ChebPoly::from_real(&[1.0]), 3);
        let out = decompose_wx_carving(&pair).unwrap();
        assert!(out.residual < 1e-15);
        assert_eq!(out.sequence.phi.len(), 4);
    }

    #[test]
    fn wx_halving_base_cases() {
        let pair = CompletionPair::wx(ChebPoly::x(), ChebPoly::from_real(&[1.0]), 1);
        let out = decompose_wx_halving(&pair).unwrap();
        assert!(close(&out.sequence.phi, &[0.0, 0.0], 1e-15));
        let padded = decompose_wx_halving(&CompletionPair::wx(
            ChebPoly::x(),
            ChebPoly::from_real(&[1.0]),
            5,
        ))
        .unwrap();
        assert!(close(
            &padded.sequence.phi,
            &[0.0, 0.0, FRAC_PI_2, -FRAC_PI_2, FRAC_PI_2, -FRAC_PI_2],
            1e-15
        ));
        assert!(padded.residual < 1e-15);
    }

    #[test]
    fn wx_to_wz_pair_conversion() {
        let seq = AngleSequence::ordinary(Convention::WxSz, vec![0.3, -1.1, 0.7, 2.0]).unwrap();
        let wx = pair_of_sequence(&seq).unwrap();
        let wz = wx_pair_to_wz(&wx).unwrap();
        assert!(wz.certificate < 1e-13);
        for j in 1..20 {
            let t = PI * j as f64 / 20.0;
            let h = crate::qspmodel::hadamard_conjugate(&wz.matrix_at(t));
            assert!(h.max_abs_diff(&wx.matrix_at(t)) < 1e-13);
        }
    }

    #[test]
    fn wz_halving_base_cases() {
        let f = LaurentPoly::from_real(-1, &[0.5, 0.0, 0.5]);
        let g = LaurentPoly::from_real(-1, &[-0.5, 0.0, 0.5]);
        let out = decompose_wz_halving(&CompletionPair::wz(f, g, 1), None).unwrap();
        assert!(close(&out.sequence.phi, &[-FRAC_PI_4, FRAC_PI_4], 1e-15));
        let f = LaurentPoly::from_real(0, &[0.3f64.cos()]);
        let g = LaurentPoly::from_real(0, &[0.3f64.sin()]);
        let out = decompose_wz_halving(&CompletionPair::wz(f, g, 0), None).unwrap();
        assert!(close(&out.sequence.phi, &[0.3], 1e-15));
    }

    #[test]
    fn gqsp_carving_base_cases() {
        let f = LaurentPoly::monomial(1, c(1.0, 0.0));
        let out =
            decompose_gqsp_carving(&CompletionPair::gqsp(f, LaurentPoly::zero(), 1, 0)).unwrap();
        let s = &out.sequence;
        assert!(close(&s.theta, &[0.0, 0.0], 1e-15) && close(&s.phi, &[0.0, 0.0], 1e-15));
        assert_eq!(s.lambda, 0.0);
        let (th, ph, la) = (0.4f64, -0.9, 1.3);
        let f = LaurentPoly::constant(Complex64::from_polar(th.cos(), la + ph));
        let g = LaurentPoly::constant(-I * Complex64::from_polar(th.sin(), la));
        let out = decompose_gqsp_carving(&CompletionPair::gqsp(f, g, 0, 0)).unwrap();
        assert!(close(&out.sequence.theta, &[th], 1e-15));
        assert!(close(&out.sequence.phi, &[ph], 1e-15));
        assert!((out.sequence.lambda - la).abs() < 1e-15);
    }

    #[test]
    fn gqsp_degenerate_step_is_reported() {
        let pair = CompletionPair::gqsp(LaurentPoly::zero(), LaurentPoly::zero(), 1, 1);
        assert!(matches!(
            decompose_gqsp_carving(&pair),
            Err(QspError::Degenerate { .. })
        ));
    }

    #[test]
    fn gqsp_vanishing_extremes_take_the_zero_branch() {
        // a degree-0 pair placed in the window [-1, 1]
        let (th, ph) = (0.4f64, 0.9f64);
        let f = LaurentPoly::new(-1, vec![ZERO, Complex64::from_polar(th.cos(), ph), ZERO]);
        let g = LaurentPoly::new(-1, vec![ZERO, c(0.0, -th.sin()), ZERO]);
        let out = decompose_gqsp_carving(&CompletionPair::gqsp(f, g, 1, 1)).unwrap();
        assert!(out.residual < 1e-15, "{}", out.residual);
    }

    #[test]
    fn unsupported_combinations() {
        let pair = CompletionPair::gqsp(LaurentPoly::constant(ONE), LaurentPoly::zero(), 0, 0);
        assert!(matches!(
            decompose(&pair, Decomposer::Halving),
            Err(QspError::Unsupported(_))
        ));
        let wz = CompletionPair::wz(LaurentPoly::constant(ONE), LaurentPoly::zero(), 0);
        assert!(matches!(
            decompose(&wz, Decomposer::Carving),
            Err(QspError::Unsupported(_))
        ));
    }

    #[test]
    fn hamsim_parts_reconstruct() {
        let parts = partition(
            &jacobi_anger_laurent(10.0, 20).unwrap(),
            Convention::WxSz,
            20,
            Normalization::Benchmark,
        )
        .unwrap()
        .parts;
        for part in &parts {
            let pair = complete_wx_rootfind(
                &part.as_cheb().unwrap(),
                part.degree,
                RootChoice::Deterministic,
            )
            .unwrap();
            let carved = decompose_wx_carving(&pair).unwrap();
            assert!(carved.residual < 1e-9, "carving {}", carved.residual);
            let halved = decompose_wx_halving(&pair).unwrap();
            assert!(halved.residual < 1e-9, "halving {}", halved.residual);
        }
        let f = jacobi_anger_laurent(10.0, 34).unwrap().scale(c(0.5, 0.0));
        let split = stability_split(&f, 34, 34);
        for part in [&split.f1, &split.f2] {
            let pair = complete_gqsp_prony(part, 34, 34).unwrap();
            let out = decompose_gqsp_carving(&pair).unwrap();
            assert!(out.residual < 1e-12, "gqsp {}", out.residual);
        }
    }

    #[test]
    fn wz_halving_with_capitalization() {
        let parts = partition(
            &jacobi_anger_laurent(10.0, 40).unwrap(),
            Convention::WzSx,
            40,
            Normalization::Benchmark,
        )
        .unwrap()
        .parts;
        for part in &parts {
            let pair =
                complete_wz_rootfind(&part.poly, part.degree, RootChoice::Deterministic).unwrap();
            let out = decompose_wz_halving(&pair, Some(1e-8)).unwrap();
            assert!(out.residual < 1e-9, "{}", out.residual);
        }
    }

    fn round_trip(seq: &AngleSequence, how: Decomposer) -> f64 {
        let pair = pair_of_sequence(seq).unwrap();
        decompose(&pair, how).unwrap().residual
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        // angles near +-pi/2 collapse layers and make the direct methods ill-conditioned
        #[test]
        fn ordinary_round_trips(phi in prop::collection::vec(-1.2f64..1.2, 1..12)) {
            let wx = AngleSequence::ordinary(Convention::WxSz, phi.clone()).unwrap();
            let wz = AngleSequence::ordinary(Convention::WzSx, phi).unwrap();
            prop_assert!(round_trip(&wx, Decomposer::Carving) < 1e-9);
            prop_assert!(round_trip(&wx, Decomposer::Halving) < 1e-9);
            prop_assert!(round_trip(&wz, Decomposer::Halving) < 1e-9);
        }

        #[test]
        fn gqsp_round_trips(
            angles in prop::collection::vec((0.0f64..1.2, -3.1f64..3.1), 1..12),
            lambda in -3.1f64..3.1,
            split in 0usize..12,
        ) {
            let n = angles.len();
            let dm = split % n;
            let (theta, phi): (Vec<f64>, Vec<f64>) = angles.into_iter().unzip();
            let seq = AngleSequence::gqsp(theta, phi, lambda, n - 1 - dm, dm).unwrap();
            prop_assert!(round_trip(&seq, Decomposer::Carving) < 1e-9);
        }
    }
}
