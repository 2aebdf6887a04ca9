//! QSP operation sequences as products of 2x2 unitaries.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QspError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which signal / signal-processing operator pair a sequence uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    #[serde(rename = "wx")]
    WxSz,
    #[serde(rename = "wz")]
    WzSx,
    #[serde(rename = "gqsp")]
    Gqsp,
}

impl Convention {
    pub fn as_str(self) -> &'static str {
        match self {
            Convention::WxSz => "wx",
            Convention::WzSx => "wz",
            Convention::Gqsp => "gqsp",
        }
    }

    pub fn is_ordinary(self) -> bool {
        self != Convention::Gqsp
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Convention {
    type Err = QspError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wx" | "wxsz" => Ok(Convention::WxSz),
            "wz" | "wzsx" => Ok(Convention::WzSx),
            "g" | "gqsp" => Ok(Convention::Gqsp),
            other => Err(QspError::Argument(format!("unknown convention '{other}'"))),
        }
    }
}

/// A 2x2 complex matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn dagger(&self) -> Mat2 {
        Mat2 {
            a: self.a.conj(),
            b: self.c.conj(),
            c: self.b.conj(),
            d: self.d.conj(),
        }
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        self.entries()
            .iter()
            .zip(o.entries())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(M^dagger M - I)_{ij}|`.
    pub fn unitarity_residual(&self) -> f64 {
        self.dagger().mul(self).max_abs_diff(&Mat2::IDENTITY)
    }

    /// `W_x(x) = [[x, i sqrt(1-x^2)], [i sqrt(1-x^2), x]]`.
    pub fn wx(x: f64) -> Mat2 {
        let s = I * (1.0 - x * x).max(0.0).sqrt();
        Mat2::new(Complex64::new(x, 0.0), s, s, Complex64::new(x, 0.0))
    }

    /// `S_z(phi) = diag(e^{i phi}, e^{-i phi})`.
    pub fn sz(phi: f64) -> Mat2 {
        let e = Complex64::from_polar(1.0, phi);
        Mat2::new(e, ZERO, ZERO, e.conj())
    }

    /// `W_z(w) = diag(w, w^{-1})`.
    pub fn wz(w: Complex64) -> Mat2 {
        Mat2::new(w, ZERO, ZERO, w.inv())
    }

    /// `S_x(phi) = [[cos, i sin], [i sin, cos]]`.
    pub fn sx(phi: f64) -> Mat2 {
        let (s, c) = phi.sin_cos();
        Mat2::new(c.into(), I * s, I * s, c.into())
    }

    pub fn w0(w: Complex64) -> Mat2 {
        Mat2::new(w, ZERO, ZERO, ONE)
    }

    pub fn w1(w: Complex64) -> Mat2 {
        Mat2::new(ONE, ZERO, ZERO, w.inv())
    }

    /// The GQSP rotation `R(theta, phi, lambda)`.
    pub fn r(theta: f64, phi: f64, lambda: f64) -> Mat2 {
        let (s, c) = theta.sin_cos();
        Mat2::new(
            Complex64::from_polar(c, lambda + phi),
            Complex64::from_polar(s, lambda),
            Complex64::from_polar(s, phi),
            Complex64::new(-c, 0.0),
        )
    }

    pub fn hadamard() -> Mat2 {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Mat2::new(h, h, h, -h)
    }
}

/// `H M H` with `H` the Hadamard matrix.
pub fn hadamard_conjugate(m: &Mat2) -> Mat2 {
    let h = Mat2::hadamard();
    h.mul(m).mul(&h)
}

/// Maps an angle to `(-pi, pi]`.
pub fn canonical_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Provenance recorded with a sequence in the interchange format.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub tau: f64,
    pub d: usize,
    pub seed: Option<u64>,
}

/// Phase factors for one convention, with the scale and weight used when
/// several sequences are recombined into one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence")]
pub struct AngleSequence {
    pub convention: Convention,
    pub d_plus: usize,
    pub d_minus: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub weight_re: f64,
    pub weight_im: f64,
    pub method: String,
    pub meta: SequenceMeta,
}

#[derive(Deserialize)]
struct RawSequence {
    convention: Convention,
    d_plus: usize,
    d_minus: usize,
    #[serde(default)]
    theta: Vec<f64>,
    phi: Vec<f64>,
    #[serde(default)]
    lambda: f64,
    alpha: f64,
    weight_re: f64,
    weight_im: f64,
    #[serde(default)]
    method: String,
    #[serde(default)]
    meta: SequenceMeta,
}

impl TryFrom<RawSequence> for AngleSequence {
    type Error = QspError;

    fn try_from(r: RawSequence) -> Result<Self> {
        let mut s = match r.convention {
            Convention::Gqsp => AngleSequence::gqsp(r.theta, r.phi, r.lambda, r.d_plus, r.d_minus)?,
            c => {
                if !r.theta.is_empty() || r.d_minus != 0 || r.d_plus + 1 != r.phi.len() {
                    return Err(QspError::Format(
                        "ordinary sequence needs d_plus = len(phi) - 1, d_minus = 0 and no theta"
                            .into(),
                    ));
                }
                AngleSequence::ordinary(c, r.phi)?
            }
        };
        if !(r.alpha.is_finite() && r.weight_re.is_finite() && r.weight_im.is_finite()) {
            return Err(QspError::Format("non-finite scale or weight".into()));
        }
        s.alpha = r.alpha;
        s.weight_re = r.weight_re;
        s.weight_im = r.weight_im;
        s.method = r.method;
        s.meta = r.meta;
        Ok(s)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(())
    } else {
        Err(QspError::Argument("angles must be finite".into()))
    }
}

/// A point at which a sequence is evaluated: `x` in `[-1, 1]` or `w` on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    X(f64),
    W(Complex64),
}

impl AngleSequence {
    /// Ordinary-QSP sequence `(phi_0, ..., phi_d)`.
    pub fn ordinary(convention: Convention, phi: Vec<f64>) -> Result<Self> {
        if convention == Convention::Gqsp {
            return Err(QspError::Argument(
                "use AngleSequence::gqsp for GQSP".into(),
            ));
        }
        if phi.is_empty() {
            return Err(QspError::Argument(
                "sequence needs at least one angle".into(),
            ));
        }
        check_finite(&phi)?;
        Ok(AngleSequence {
            convention,
            d_plus: phi.len() - 1,
            d_minus: 0,
            theta: Vec::new(),
            phi: phi.into_iter().map(canonical_angle).collect(),
            lambda: 0.0,
            alpha: 1.0,
            weight_re: 1.0,
            weight_im: 0.0,
            method: String::new(),
            meta: SequenceMeta::default(),
        })
    }

    /// GQSP sequence; `theta[j]`, `phi[j]` carry index `k = j - d_minus`.
    pub fn gqsp(
        theta: Vec<f64>,
        phi: Vec<f64>,
        lambda: f64,
        d_plus: usize,
        d_minus: usize,
    ) -> Result<Self> {
        let n = d_plus + d_minus + 1;
        if theta.len() != n || phi.len() != n {
            return Err(QspError::Argument(format!(
                "GQSP sequence needs {n} thetas and phis, got {} and {}",
                theta.len(),
                phi.len()
            )));
        }
        check_finite(&theta)?;
        check_finite(&phi)?;
        check_finite(&[lambda])?;
        Ok(AngleSequence {
            convention: Convention::Gqsp,
            d_plus,
            d_minus,
            theta: theta.into_iter().map(canonical_angle).collect(),
            phi: phi.into_iter().map(canonical_angle).collect(),
            lambda: canonical_angle(lambda),
            alpha: 1.0,
            weight_re: 1.0,
            weight_im: 0.0,
            method: String::new(),
            meta: SequenceMeta::default(),
        })
    }

    pub fn with_scale(mut self, alpha: f64, weight: Complex64) -> Self {
        self.alpha = alpha;
        self.weight_re = weight.re;
        self.weight_im = weight.im;
        self
    }

    pub fn with_method(mut self, method: &str, meta: SequenceMeta) -> Self {
        self.method = method.to_string();
        self.meta = meta;
        self
    }

    pub fn weight(&self) -> Complex64 {
        Complex64::new(self.weight_re, self.weight_im)
    }

    /// Number of signal-operator applications.
    pub fn degree(&self) -> usize {
        self.d_plus + self.d_minus
    }

    /// The point at angle `theta` in this convention's variable.
    pub fn point_at(&self, theta: f64) -> Point {
        match self.convention {
            Convention::WxSz => Point::X(theta.cos()),
            _ => Point::W(Complex64::from_polar(1.0, theta)),
        }
    }

    /// Evaluates the operation sequence as a 2x2 matrix.
    pub fn eval(&self, point: Point) -> Result<Mat2> {
        match (self.convention, point) {
            (Convention::WxSz, Point::X(x)) => {
                if !(-1.0..=1.0).contains(&x) {
                    return Err(QspError::Domain(format!("x = {x} outside [-1, 1]")));
                }
                let w = Mat2::wx(x);
                Ok(self.phi[1..].iter().fold(Mat2::sz(self.phi[0]), |acc, &p| {
                    acc.mul(&w).mul(&Mat2::sz(p))
                }))
            }
            (Convention::WzSx, Point::W(w)) => {
                check_unit(w)?;
                let m = Mat2::wz(w);
                Ok(self.phi[1..].iter().fold(Mat2::sx(self.phi[0]), |acc, &p| {
                    acc.mul(&m).mul(&Mat2::sx(p))
                }))
            }
            (Convention::Gqsp, Point::W(w)) => {
                check_unit(w)?;
                let (w0, w1) = (Mat2::w0(w), Mat2::w1(w));
                let mut acc = Mat2::r(self.theta[0], self.phi[0], self.lambda);
                for j in 1..=self.degree() {
                    let sig = if j <= self.d_minus { &w1 } else { &w0 };
                    acc = acc.mul(sig).mul(&Mat2::r(self.theta[j], self.phi[j], 0.0));
                }
                Ok(acc)
            }
            (c, p) => Err(QspError::Domain(format!(
                "point {p:?} does not match convention {c}"
            ))),
        }
    }

    /// The matrix element this sequence implements: `Re<0|U|0>` for ordinary
    /// QSP (the real part extracted by `(U + U^dagger)/2`), `<0|U|0>` for GQSP.
    pub fn implemented(&self, point: Point) -> Result<Complex64> {
        let u = self.eval(point)?;
        Ok(match self.convention {
            Convention::Gqsp => u.a,
            _ => Complex64::new(u.a.re, 0.0),
        })
    }

    /// `alpha * weight * implemented` at angle `theta`.
    pub fn contribution_at(&self, theta: f64) -> Result<Complex64> {
        Ok(self.implemented(self.point_at(theta))? * self.weight() * self.alpha)
    }
}

fn check_unit(w: Complex64) -> Result<()> {
    if (w.norm() - 1.0).abs() > 1e-12 {
        Err(QspError::Domain(format!(
            "|w| = {} is not on the unit circle",
            w.norm()
        )))
    } else {
        Ok(())
    }
}

/// Free-function form of [`AngleSequence::eval`].
pub fn eval_sequence(seq: &AngleSequence, point: Point) -> Result<Mat2> {
    seq.eval(point)
}

/// Free-function form of [`AngleSequence::implemented`].
pub fn implemented_function(seq: &AngleSequence, point: Point) -> Result<Complex64> {
    seq.implemented(point)
}

/// Serializes sequences as a JSON array.
pub fn write_sequences(seqs: &[AngleSequence]) -> Result<String> {
    Ok(serde_json::to_string_pretty(seqs)?)
}

/// Parses a JSON array of sequences, or a single sequence object.
pub fn read_sequences(text: &str) -> Result<Vec<AngleSequence>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let seqs = if value.is_array() {
        serde_json::from_value::<Vec<AngleSequence>>(value)?
    } else {
        vec![serde_json::from_value::<AngleSequence>(value)?]
    };
    if seqs.is_empty() {
        return Err(QspError::Format("no sequences in file".into()));
    }
    Ok(seqs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_angles_give_signal_operator() {
        let s = AngleSequence::ordinary(Convention::WxSz, vec![0.0, 0.0]).unwrap();
        for x in [-0.8, 0.0, 0.3, 1.0] {
            let u = s.eval(Point::X(x)).unwrap();
            assert!(u.max_abs_diff(&Mat2::wx(x)) < 1e-15);
        }
    }

    #[test]
    fn identity_pad_in_wz() {
        let w = Complex64::from_polar(1.0, 0.77);
        let pad = Mat2::wz(w)
            .mul(&Mat2::sx(FRAC_PI_2))
            .mul(&Mat2::wz(w))
            .mul(&Mat2::sx(-FRAC_PI_2));
        assert!(pad.max_abs_diff(&Mat2::IDENTITY) < 1e-15);
        let a = AngleSequence::ordinary(Convention::WzSx, vec![0.3, -0.2]).unwrap();
        let padded =
            AngleSequence::ordinary(Convention::WzSx, vec![0.3, -0.2 + FRAC_PI_2, -FRAC_PI_2])
                .unwrap();
        let lhs = padded.eval(Point::W(w)).unwrap();
        let rhs = a
            .eval(Point::W(w))
            .unwrap()
            .mul(&Mat2::sx(FRAC_PI_2))
            .mul(&Mat2::wz(w))
            .mul(&Mat2::sx(-FRAC_PI_2));
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }

    #[test]
    fn gqsp_single_w0_gives_monomial_row() {
        let s = AngleSequence::gqsp(vec![0.0, 0.0], vec![0.0, 0.0], 0.0, 1, 0).unwrap();
        let w = Complex64::from_polar(1.0, 1.1);
        let u = s.eval(Point::W(w)).unwrap();
        assert!((u.a - w).norm() < 1e-15);
        assert!(u.b.norm() < 1e-15);
        assert!((s.implemented(Point::W(w)).unwrap() - w).norm() < 1e-15);
    }

    #[test]
    fn hadamard_maps_wz_to_wx_form() {
        let w = Complex64::from_polar(1.0, 0.4);
        let m = hadamard_conjugate(&Mat2::wz(w));
        assert!((m.a - (w + w.inv()) / 2.0).norm() < 1e-15);
        let twice = hadamard_conjugate(&m);
        assert!(twice.max_abs_diff(&Mat2::wz(w)) < 1e-15);
    }

    #[test]
    fn cross_convention_consistency() {
        let phi = vec![0.1, -0.7, 1.3, 0.25, -2.0];
        let sx = AngleSequence::ordinary(Convention::WxSz, phi.clone()).unwrap();
        let sw = AngleSequence::ordinary(Convention::WzSx, phi).unwrap();
        for t in [0.05, 0.9, 1.7, 2.8] {
            let ux = sx.eval(Point::X(f64::cos(t))).unwrap();
            let uw = sw.eval(Point::W(Complex64::from_polar(1.0, t))).unwrap();
            assert!(hadamard_conjugate(&uw).max_abs_diff(&ux) < 1e-14);
        }
    }

    #[test]
    fn single_angle_wz_is_cosine() {
        let s = AngleSequence::ordinary(Convention::WzSx, vec![0.6]).unwrap();
        let v = s.implemented(Point::W(c(0.0, 1.0))).unwrap();
        assert!((v - c(0.6f64.cos(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let s = AngleSequence::ordinary(Convention::WxSz, vec![0.0, 0.0]).unwrap();
        assert!(matches!(s.eval(Point::X(1.5)), Err(QspError::Domain(_))));
        assert!(matches!(
            s.eval(Point::W(c(1.0, 0.0))),
            Err(QspError::Domain(_))
        ));
        let g = AngleSequence::gqsp(vec![0.0], vec![0.0], 0.0, 0, 0).unwrap();
        assert!(matches!(
            g.eval(Point::W(c(2.0, 0.0))),
            Err(QspError::Domain(_))
        ));
        assert!(AngleSequence::gqsp(vec![0.0], vec![0.0, 1.0], 0.0, 0, 0).is_err());
        assert!(AngleSequence::ordinary(Convention::WxSz, vec![f64::NAN]).is_err());
    }

    #[test]
    fn canonicalization() {
        assert!((canonical_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((canonical_angle(-PI) - PI).abs() < 1e-15);
        assert!((canonical_angle(0.5) - 0.5).abs() < 1e-16);
        let s = AngleSequence::ordinary(Convention::WzSx, vec![7.0]).unwrap();
        assert!((s.phi[0] - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let s = AngleSequence::gqsp(vec![0.1, 0.2, 0.3], vec![-0.1, 0.0, 0.4], 0.7, 1, 1)
            .unwrap()
            .with_scale(2.0, c(0.0, 1.0))
            .with_method(
                "g.p.c",
                SequenceMeta {
                    tau: 10.0,
                    d: 1,
                    seed: Some(3),
                },
            );
        let text = write_sequences(std::slice::from_ref(&s)).unwrap();
        let back = read_sequences(&text).unwrap();
        assert_eq!(back, vec![s.clone()]);
        let single = serde_json::to_string(&s).unwrap();
        assert_eq!(read_sequences(&single).unwrap(), vec![s]);
        assert!(read_sequences("[]").is_err());
        assert!(read_sequences("{\"convention\":\"wx\"}").is_err());
        let bad = r#"{"convention":"wx","d_plus":3,"d_minus":0,"phi":[0.0],"alpha":1,"weight_re":1,"weight_im":0}"#;
        assert!(matches!(read_sequences(bad), Err(QspError::Format(_))));
    }

    fn random_unitarity(conv: Convention, angles: &[f64], t: f64) -> f64 {
        let s = match conv {
            Convention::Gqsp => {
                let n = angles.len() / 2;
                AngleSequence::gqsp(
                    angles[..n].to_vec(),
                    angles[n..2 * n].to_vec(),
                    0.3,
                    n / 2,
                    n - 1 - n / 2,
                )
                .unwrap()
            }
            c => AngleSequence::ordinary(c, angles.to_vec()).unwrap(),
        };
        s.eval(s.point_at(t)).unwrap().unitarity_residual()
    }

    proptest! {
        #[test]
        fn sequences_are_unitary(angles in prop::collection::vec(-3.2f64..3.2, 2..40), t in 0.0f64..3.0) {
            let d = angles.len() as f64;
            for conv in [Convention::WxSz, Convention::WzSx, Convention::Gqsp] {
                prop_assert!(random_unitarity(conv, &angles, t) <= d * 1e-15 + 1e-15);
            }
        }

        #[test]
        fn ordinary_sequence_has_bounded_fourier_support(angles in prop::collection::vec(-3.2f64..3.2, 1..12)) {
            let s = AngleSequence::ordinary(Convention::WzSx, angles.clone()).unwrap();
            let d = angles.len() - 1;
            let n = 2 * d + 2;
            let samples: Vec<Complex64> = (0..n)
                .map(|j| s.eval(Point::W(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))).unwrap().a)
                .collect();
            // exponents of U_11 are in [-d, d] with parity d; check the one alias slot d+1
            let k = (d + 1) as f64;
            let coeff: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * k * j as f64 / n as f64))
                .sum::<Complex64>() / n as f64;
            prop_assert!(coeff.norm() <= 1e-12);
        }
    }
}
