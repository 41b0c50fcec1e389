//! Numerical functional calculus on finite metric-measure spaces.
//!
//! The crate realizes, on a finite point set with a metric and positive
//! weights, the objects that spectral multiplier theory for Hardy spaces is
//! built from:
//!
//! - [`space`]: balls, volumes, doubling and growth constants, rescaling.
//! - [`spectral`]: self-adjoint operators, their eigen-resolution, functional
//!   calculus, heat kernels and fitted Gaussian / Davies-Gaffney constants.
//! - [`hardy`]: the conical square function, the `H^1_L` norm, atoms and
//!   molecules.
//! - [`multiplier`]: Sobolev norms via FFT, Hörmander constants, dyadic
//!   partitions of unity, the `Φ_t` / `Θ_j` kernels and the multiplier
//!   experiments.
//! - [`wave`]: cosine propagators, propagation speed and the Fourier-synthesis
//!   weighted tail inequality.
//! - [`models`]: graph and Schrödinger model builders.
//!
//! Everything is dense and exact-first: eigen-decompositions are full, and
//! every quantity is computed through the spectral resolution.

pub mod error;
pub mod hardy;
pub mod io;
pub mod models;
pub mod multiplier;
pub mod space;
pub mod spectral;
pub mod table;
pub mod wave;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex function vector on the point set.
pub type CVector = nalgebra::DVector<Complex64>;
/// Complex kernel matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Real function vector.
pub type RVector = nalgebra::DVector<f64>;
/// Real kernel matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;

/// Promote a real vector to a complex one.
pub fn complexify(v: &RVector) -> CVector {
    v.map(|x| Complex64::new(x, 0.0))
}
