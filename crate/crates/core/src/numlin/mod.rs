//! Numerical kernels: polynomial roots, FFT, Hankel null vectors, least squares
//! and L-BFGS.

pub mod dd;
pub mod fourier;
pub mod hankel;
pub mod lbfgs;
pub mod linsolve;
pub mod roots;

pub use fourier::{fourier_coeffs, fourier_coeffs_adaptive, inverse_fourier};
pub use hankel::{hankel_null_vector, prony_null_vector, NullVector};
pub use lbfgs::{minimize, LbfgsOptions, LbfgsResult};
pub use linsolve::{solve_linear, CMatrix, LstsqSolution};
pub use roots::{all_roots, RootSet};
