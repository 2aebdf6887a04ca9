//! Python bindings for `qspkit`.
//!
//! Angles come back as plain Python lists; complex values as `complex`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use qspkit::completion::{self, CompletionPair, PairData, RootChoice};
use qspkit::decomposition::{self, Decomposer};
use qspkit::laurent::{ChebPoly, LaurentPoly};
use qspkit::metrics::{self, QueryClass};
use qspkit::pipeline::{self, FindOptions, Method, DEFAULT_EPS_CAP};
use qspkit::qspmodel::{self, Convention, Point};
use qspkit::{specialfn, target, QspError};

create_exception!(qspkit_py, QspkitError, PyException);

fn err(e: QspError) -> PyErr {
    QspkitError::new_err(e.to_string())
}

fn convention(s: &str) -> PyResult<Convention> {
    s.parse().map_err(err)
}

/// A phase-factor sequence in one of the three conventions.
#[pyclass(name = "AngleSequence", module = "qspkit_py", from_py_object)]
#[derive(Clone)]
pub struct PyAngleSequence {
    inner: qspmodel::AngleSequence,
}

impl PyAngleSequence {
    fn point(&self, value: Complex64) -> Point {
        match self.inner.convention {
            Convention::WxSz => Point::X(value.re),
            _ => Point::W(value),
        }
    }
}

#[pymethods]
impl PyAngleSequence {
    /// Ordinary sequence `(phi_0, ..., phi_d)` for `"wx"` or `"wz"`.
    #[staticmethod]
    fn ordinary(convention_name: &str, phi: Vec<f64>) -> PyResult<Self> {
        let inner =
            qspmodel::AngleSequence::ordinary(convention(convention_name)?, phi).map_err(err)?;
        Ok(PyAngleSequence { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (theta, phi, lam, d_plus, d_minus))]
    fn gqsp(
        theta: Vec<f64>,
        phi: Vec<f64>,
        lam: f64,
        d_plus: usize,
        d_minus: usize,
    ) -> PyResult<Self> {
        let inner = qspmodel::AngleSequence::gqsp(theta, phi, lam, d_plus, d_minus).map_err(err)?;
        Ok(PyAngleSequence { inner })
    }

    #[getter]
    fn convention(&self) -> &'static str {
        self.inner.convention.as_str()
    }

    #[getter]
    fn d_plus(&self) -> usize {
        self.inner.d_plus
    }

    #[getter]
    fn d_minus(&self) -> usize {
        self.inner.d_minus
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta.clone()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.inner.phi.clone()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn weight(&self) -> Complex64 {
        self.inner.weight()
    }

    #[getter]
    fn method(&self) -> String {
        self.inner.method.clone()
    }

    /// The 2x2 matrix at `x` (wx) or `w` on the unit circle (wz, gqsp).
    fn eval(&self, point: Complex64) -> PyResult<[[Complex64; 2]; 2]> {
        let m = self.inner.eval(self.point(point)).map_err(err)?;
        Ok([[m.a, m.b], [m.c, m.d]])
    }

    /// The matrix element this sequence implements at `point`.
    fn implemented(&self, point: Complex64) -> PyResult<Complex64> {
        self.inner.implemented(self.point(point)).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        qspmodel::write_sequences(std::slice::from_ref(&self.inner)).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.phi.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "AngleSequence(convention='{}', d_plus={}, d_minus={}, alpha={})",
            self.inner.convention, self.inner.d_plus, self.inner.d_minus, self.inner.alpha
        )
    }
}

/// A completed `(P, Q)` or `(F, G)` pair with its unitarity certificate.
#[pyclass(name = "CompletionPair", module = "qspkit_py", from_py_object)]
#[derive(Clone)]
pub struct PyCompletionPair {
    inner: CompletionPair,
}

#[pymethods]
impl PyCompletionPair {
    #[getter]
    fn convention(&self) -> &'static str {
        self.inner.convention.as_str()
    }

    #[getter]
    fn d_plus(&self) -> usize {
        self.inner.d_plus
    }

    #[getter]
    fn d_minus(&self) -> usize {
        self.inner.d_minus
    }

    #[getter]
    fn certificate(&self) -> f64 {
        self.inner.certificate
    }

    /// Chebyshev coefficients of `(P, Q)` for wx; for the others the lowest
    /// exponent and coefficients of `F` and `G`.
    fn coefficients(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        Ok(match &self.inner.data {
            PairData::Wx { p, q } => (p.coeffs().to_vec(), q.coeffs().to_vec())
                .into_pyobject(py)?
                .into_any()
                .unbind(),
            PairData::Laurent { f, g } => {
                ((f.lo(), f.coeffs().to_vec()), (g.lo(), g.coeffs().to_vec()))
                    .into_pyobject(py)?
                    .into_any()
                    .unbind()
            }
        })
    }

    /// Angles for this pair; `how` is `"carve"`, `"halve"` or `"halve-cap"`.
    /// Returns the sequence and its reconstruction residual.
    #[pyo3(signature = (how, eps_cap = DEFAULT_EPS_CAP))]
    fn decompose(&self, how: &str, eps_cap: f64) -> PyResult<(PyAngleSequence, f64)> {
        let how = match how {
            "carve" => Decomposer::Carving,
            "halve" => Decomposer::Halving,
            "halve-cap" => Decomposer::CapHalving(eps_cap),
            other => {
                return Err(QspkitError::new_err(format!(
                    "unknown decomposition '{other}'"
                )))
            }
        };
        let out = decomposition::decompose(&self.inner, how).map_err(err)?;
        Ok((
            PyAngleSequence {
                inner: out.sequence,
            },
            out.residual,
        ))
    }

    fn __repr__(&self) -> String {
        format!(
            "CompletionPair(convention='{}', d_plus={}, d_minus={}, certificate={:.3e})",
            self.inner.convention, self.inner.d_plus, self.inner.d_minus, self.inner.certificate
        )
    }
}

/// Outcome of [`find_angles`].
#[pyclass(name = "FindResult", module = "qspkit_py", get_all)]
pub struct PyFindResult {
    method: String,
    tau: f64,
    d: usize,
    sequences: Vec<PyAngleSequence>,
    epsilon: f64,
    queries: usize,
    cert_residual: Option<f64>,
    recon_residual: Option<f64>,
    converged: bool,
    wall_time_ms: f64,
}

#[pymethods]
impl PyFindResult {
    fn __repr__(&self) -> String {
        format!(
            "FindResult(method='{}', tau={}, d={}, epsilon={:.3e}, queries={})",
            self.method, self.tau, self.d, self.epsilon, self.queries
        )
    }
}

/// Angles for `e^{-i tau x} / 2` at even order `d`, e.g. `find_angles("g.p.c", 10.0, 34)`.
#[pyfunction]
#[pyo3(signature = (method, tau, d, seed = 0, eps_cap = DEFAULT_EPS_CAP))]
fn find_angles(
    py: Python<'_>,
    method: &str,
    tau: f64,
    d: usize,
    seed: u64,
    eps_cap: f64,
) -> PyResult<PyFindResult> {
    let method: Method = method.parse().and_then(Method::validate).map_err(err)?;
    let opts = FindOptions { seed, eps_cap };
    let found = py
        .detach(|| pipeline::find_angles(method, tau, d, &opts))
        .map_err(err)?;
    Ok(PyFindResult {
        method: found.method.to_string(),
        tau: found.tau,
        d: found.d,
        sequences: found
            .sequences
            .into_iter()
            .map(|inner| PyAngleSequence { inner })
            .collect(),
        epsilon: found.epsilon,
        queries: found.queries,
        cert_residual: found.cert_residual,
        recon_residual: found.recon_residual,
        converged: found.converged,
        wall_time_ms: found.wall_time_ms,
    })
}

fn unwrap_seqs(seqs: Vec<PyAngleSequence>) -> Vec<qspmodel::AngleSequence> {
    seqs.into_iter().map(|s| s.inner).collect()
}

/// `max_theta |sum alpha w implemented - e^{-i tau cos theta}|`.
#[pyfunction]
fn sup_error(py: Python<'_>, seqs: Vec<PyAngleSequence>, tau: f64) -> PyResult<f64> {
    let seqs = unwrap_seqs(seqs);
    py.detach(|| metrics::sup_error(&seqs, tau)).map_err(err)
}

#[pyfunction]
fn unitarity_residual(seqs: Vec<PyAngleSequence>) -> PyResult<f64> {
    metrics::unitarity_residual(&unwrap_seqs(seqs)).map_err(err)
}

/// Query count for a class such as `"gqsp-prony"` or `"ordinary-rf"`.
#[pyfunction]
fn query_count(class: &str, d: usize) -> PyResult<usize> {
    let class: QueryClass = class.parse().map_err(err)?;
    metrics::query_count(class, d).map_err(err)
}

#[pyfunction]
fn bessel_tail_bound(tau: f64, d: usize) -> PyResult<f64> {
    specialfn::bessel_tail_bound(tau, d).map_err(err)
}

/// Coefficients of `e^{-i tau cos theta}` in `w = e^{i theta}` for `k = -d..=d`.
#[pyfunction]
fn jacobi_anger(tau: f64, d: usize) -> PyResult<Vec<Complex64>> {
    let f = target::jacobi_anger_laurent(tau, d).map_err(err)?;
    let d = d as i64;
    Ok((-d..=d).map(|k| f.coeff(k)).collect())
}

/// Completes a target into a certified pair.
///
/// `coeffs` are Chebyshev coefficients for `"wx"` and Laurent coefficients
/// starting at exponent `lo` otherwise. `method` is `"rf"`, `"drf"` or `"prony"`.
#[pyfunction]
#[pyo3(signature = (convention_name, coeffs, d_plus, d_minus = 0, lo = 0, method = "drf", seed = 0))]
fn complete(
    convention_name: &str,
    coeffs: Vec<Complex64>,
    d_plus: usize,
    d_minus: usize,
    lo: i64,
    method: &str,
    seed: u64,
) -> PyResult<PyCompletionPair> {
    let conv = convention(convention_name)?;
    let choice = match method {
        "prony" => None,
        "rf" => Some(RootChoice::Randomized { seed }),
        "drf" => Some(RootChoice::Deterministic),
        other => {
            return Err(QspkitError::new_err(format!(
                "unknown completion '{other}'"
            )))
        }
    };
    let laurent = || LaurentPoly::new(lo, coeffs.clone());
    let pair = match (conv, choice) {
        (Convention::WxSz, Some(c)) => {
            completion::complete_wx_rootfind(&ChebPoly::new(coeffs.clone()), d_plus, c)
        }
        (Convention::WxSz, None) => {
            let f = qspkit::laurent::cheb_to_laurent(&coeffs);
            completion::complete_wz_prony(&f, d_plus).and_then(|p| completion::wz_pair_to_wx(&p))
        }
        (Convention::WzSx, Some(c)) => completion::complete_wz_rootfind(&laurent(), d_plus, c),
        (Convention::WzSx, None) => completion::complete_wz_prony(&laurent(), d_plus),
        (Convention::Gqsp, Some(c)) => {
            completion::complete_gqsp_rootfind(&laurent(), d_plus, d_minus, c)
        }
        (Convention::Gqsp, None) => completion::complete_gqsp_prony(&laurent(), d_plus, d_minus),
    }
    .map_err(err)?;
    Ok(PyCompletionPair { inner: pair })
}

/// The pair a sequence implements.
#[pyfunction]
fn pair_of_sequence(seq: PyAngleSequence) -> PyResult<PyCompletionPair> {
    let inner = decomposition::pair_of_sequence(&seq.inner).map_err(err)?;
    Ok(PyCompletionPair { inner })
}

#[pyfunction]
fn read_sequences(text: &str) -> PyResult<Vec<PyAngleSequence>> {
    let seqs = qspmodel::read_sequences(text).map_err(err)?;
    Ok(seqs
        .into_iter()
        .map(|inner| PyAngleSequence { inner })
        .collect())
}

#[pyfunction]
fn write_sequences(seqs: Vec<PyAngleSequence>) -> PyResult<String> {
    qspmodel::write_sequences(&unwrap_seqs(seqs)).map_err(err)
}

#[pymodule]
pub fn qspkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QspkitError", m.py().get_type::<QspkitError>())?;
    m.add_class::<PyAngleSequence>()?;
    m.add_class::<PyCompletionPair>()?;
    m.add_class::<PyFindResult>()?;
    m.add_function(wrap_pyfunction!(find_angles, m)?)?;
    m.add_function(wrap_pyfunction!(sup_error, m)?)?;
    m.add_function(wrap_pyfunction!(unitarity_residual, m)?)?;
    m.add_function(wrap_pyfunction!(query_count, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(jacobi_anger, m)?)?;
    m.add_function(wrap_pyfunction!(complete, m)?)?;
    m.add_function(wrap_pyfunction!(pair_of_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(read_sequences, m)?)?;
    m.add_function(wrap_pyfunction!(write_sequences, m)?)?;
    Ok(())
}
