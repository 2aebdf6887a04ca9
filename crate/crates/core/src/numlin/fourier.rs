//! Fourier coefficients of functions sampled on the unit circle.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{QspError, Result};

/// Largest grid tried by [`fourier_coeffs_adaptive`].
pub const MAX_SAMPLES: usize = 1 << 20;

/// Stopping tolerance for successive estimates, relative to the largest coefficient.
pub const STABLE_TOL: f64 = 1e-14;

/// `c[k] = (1/N) sum_n h(t_n) e^{-2 pi i k n / N}`; entry `k` holds `h_hat_k` for
/// `0 <= k < N/2` and `h_hat_{k-N}` above.
pub fn fourier_coeffs(samples: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = samples.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(QspError::Argument(format!(
            "sample count {n} is not a power of two"
        )));
    }
    if let Some(bad) = samples
        .iter()
        .find(|s| !(s.re.is_finite() && s.im.is_finite()))
    {
        return Err(QspError::Singularity {
            max_abs: bad.norm(),
        });
    }
    let mut buf = samples.to_vec();
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    Ok(buf)
}

/// Samples `sum_k c[k] t_n^k` on the same grid; inverse of [`fourier_coeffs`].
pub fn inverse_fourier(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::<f64>::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    buf
}

/// `h_hat_k` read out of a length-`N` coefficient vector.
pub fn coefficient(c: &[Complex64], k: i64) -> Complex64 {
    c[k.rem_euclid(c.len() as i64) as usize]
}

/// Unit-circle sample points `t_n = e^{2 pi i n / N}`.
pub fn circle_grid(n: usize) -> impl Iterator<Item = Complex64> {
    (0..n)
        .map(move |j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
}

/// Coefficients `h_hat_k` for `k` in `ks`, refining the grid by doubling from
/// `n0` until two successive estimates agree to [`STABLE_TOL`].
///
/// Returns the coefficients and the grid size used.
pub fn fourier_coeffs_adaptive<F>(h: F, ks: &[i64], n0: usize) -> Result<(Vec<Complex64>, usize)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut n = n0.next_power_of_two().max(8);
    let mut prev: Option<Vec<Complex64>> = None;
    loop {
        let samples = circle_grid(n).map(&h).collect::<Result<Vec<_>>>()?;
        let c = fourier_coeffs(&samples)?;
        let cur: Vec<Complex64> = ks.iter().map(|&k| coefficient(&c, k)).collect();
        if let Some(p) = &prev {
            let scale = cur
                .iter()
                .map(|v| v.norm())
                .fold(f64::MIN_POSITIVE, f64::max);
            let diff = cur
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if diff <= STABLE_TOL * scale || n >= MAX_SAMPLES {
                return Ok((cur, n));
            }
        }
        prev = Some(cur);
        n *= 2;
    }
}
