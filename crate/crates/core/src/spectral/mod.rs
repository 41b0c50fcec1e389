//! Self-adjoint non-negative operators on `L²(Ω, μ)` and their functional
//! calculus.
//!
//! An [`Operator`] is stored through its kernel: `(Lf)(x) = Σ_y K[x][y] f(y) μ(y)`.
//! A symmetric kernel is exactly μ-self-adjointness. The eigen-resolution is
//! computed on the symmetric matrix `diag(√μ) K diag(√μ)` and mapped back, so
//! the eigenvectors are μ-orthonormal to working precision.

mod bounds;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::multiplier::Multiplier;
use crate::space::Space;
use crate::{CMatrix, CVector, Complex64, RMatrix, RVector};

pub use bounds::{
    c_grid, check_davies_gaffney, check_gaussian_bounds, weighted_kernel_norm, weighted_row_column_sups,
    BoundWitness, FittedBound,
};

/// How an operator with constants (or anything else) in its kernel is made
/// injective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelHandling {
    /// A nontrivial kernel is an error.
    Forbid,
    /// Drop eigenpairs with `λ <= tol` and work on the orthogonal complement.
    Deflate,
    /// Replace `L` by `L + εI`.
    Shift(f64),
}

#[derive(Debug, Clone)]
pub struct Operator {
    space: Arc<Space>,
    kernel: RMatrix,
    locality_radius: Option<f64>,
    handling: KernelHandling,
}

impl Operator {
    /// Builds an operator from its kernel. The kernel must be symmetric.
    pub fn new(space: Arc<Space>, kernel: RMatrix, locality_radius: Option<f64>) -> Result<Self> {
        let n = space.n();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "kernel is {}x{} on a space of {} points",
                kernel.nrows(),
                kernel.ncols(),
                n
            )));
        }
        let scale = kernel.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (kernel[(i, j)], kernel[(j, i)]);
                if !a.is_finite() || (a - b).abs() > 1e-12 * scale {
                    return Err(Error::NotSelfAdjoint(format!("K[{i}][{j}] = {a} but K[{j}][{i}] = {b}")));
                }
            }
        }
        Ok(Operator { space, kernel, locality_radius, handling: KernelHandling::Forbid })
    }

    /// Operator from the matrix `A` of its action on plain vectors, `Lf = A f`.
    pub fn from_action(space: Arc<Space>, action: &RMatrix, locality_radius: Option<f64>) -> Result<Self> {
        let w = space.weights().to_vec();
        let kernel = DMatrix::from_fn(action.nrows(), action.ncols(), |i, j| action[(i, j)] / w[j]);
        Self::new(space, kernel, locality_radius)
    }

    /// Sets the kernel handling; a shift is folded into the kernel immediately.
    pub fn with_handling(mut self, handling: KernelHandling) -> Result<Self> {
        if let KernelHandling::Shift(eps) = handling {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidArgument(format!("shift must be positive, got {eps}")));
            }
            for i in 0..self.space.n() {
                self.kernel[(i, i)] += eps / self.space.weight(i);
            }
        }
        self.handling = handling;
        Ok(self)
    }

    /// The operator `τL`.
    pub fn scaled(&self, tau: f64) -> Operator {
        Operator { kernel: &self.kernel * tau, ..self.clone() }
    }

    /// Same kernel on another space with identical weights (used with metric rescaling).
    pub fn on_space(&self, space: Arc<Space>) -> Result<Operator> {
        if space.weights() != self.space.weights() {
            return Err(Error::InvalidArgument("target space has different weights".into()));
        }
        Ok(Operator { space, ..self.clone() })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn kernel(&self) -> &RMatrix {
        &self.kernel
    }

    pub fn locality_radius(&self) -> Option<f64> {
        self.locality_radius
    }

    pub fn handling(&self) -> KernelHandling {
        self.handling
    }

    /// The matrix `A = K diag(μ)` with `Lf = A f`.
    pub fn action_matrix(&self) -> RMatrix {
        let mut a = self.kernel.clone();
        for (j, mut col) in a.column_iter_mut().enumerate() {
            col *= self.space.weight(j);
        }
        a
    }

    pub fn apply(&self, f: &CVector) -> CVector {
        let a = self.action_matrix();
        real_times_complex(&a, f)
    }

    /// `L^k f` by repeated application of the kernel (exact supports).
    pub fn apply_power(&self, k: usize, f: &CVector) -> CVector {
        let a = self.action_matrix();
        let mut out = f.clone();
        for _ in 0..k {
            out = real_times_complex(&a, &out);
        }
        out
    }

    pub fn decompose(&self) -> Result<SpectralDecomposition> {
        spectral_decomposition(self)
    }
}

/// Eigenvalues `λ_1 <= … <= λ_r` (all positive) and μ-orthonormal
/// eigenvectors. With deflation `r < n` and the calculus acts on the
/// orthogonal complement of the kernel.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    space: Arc<Space>,
    eigenvalues: Vec<f64>,
    eigenvectors: RMatrix,
    /// Largest |entry| of each eigenvector, used for round-off floors.
    sup_norms: Vec<f64>,
    deflated: usize,
    /// μ-orthonormal basis of the removed kernel (`n × deflated`).
    null_vectors: RMatrix,
}

pub fn spectral_decomposition(op: &Operator) -> Result<SpectralDecomposition> {
    let space = op.space.clone();
    let n = space.n();
    let sqrt_w: Vec<f64> = space.weights().iter().map(|w| w.sqrt()).collect();
    let sym = DMatrix::from_fn(n, n, |i, j| {
        let v = sqrt_w[i] * op.kernel[(i, j)] * sqrt_w[j];
        let vt = sqrt_w[j] * op.kernel[(j, i)] * sqrt_w[i];
        0.5 * (v + vt)
    });
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let radius = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * radius.max(f64::MIN_POSITIVE);
    let smallest = eig.eigenvalues[order[0]];
    if smallest < -tol {
        return Err(Error::NegativeSpectrum(smallest));
    }
    let keep: Vec<usize> = match op.handling {
        KernelHandling::Deflate => order.iter().copied().filter(|&i| eig.eigenvalues[i] > tol).collect(),
        _ => {
            if smallest <= tol {
                return Err(Error::KernelNotTrivial(smallest));
            }
            order.clone()
        }
    };
    if keep.is_empty() {
        return Err(Error::KernelNotTrivial(smallest));
    }
    let eigenvalues: Vec<f64> = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = RMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        // Fix the sign so results are reproducible across runs.
        let pivot = v.iter().cloned().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for x in 0..n {
            eigenvectors[(x, c)] = sign * v[x] / sqrt_w[x];
        }
    }
    let dropped: Vec<usize> = order.iter().copied().filter(|i| !keep.contains(i)).collect();
    let null_vectors = RMatrix::from_fn(n, dropped.len(), |x, c| eig.eigenvectors[(x, dropped[c])] / sqrt_w[x]);
    let sup_norms = eigenvectors.column_iter().map(|c| c.amax()).collect();
    Ok(SpectralDecomposition { space, eigenvalues, eigenvectors, sup_norms, deflated: dropped.len(), null_vectors })
}

impl SpectralDecomposition {
    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `i` is `u_i`.
    pub fn eigenvectors(&self) -> &RMatrix {
        &self.eigenvectors
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Number of eigenpairs removed by deflation.
    pub fn deflated_dim(&self) -> usize {
        self.deflated
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `⟨u_i, f⟩_μ` for every retained eigenvector.
    pub fn coefficients(&self, f: &CVector) -> CVector {
        let w = self.space.weights();
        let re = DVector::from_fn(f.len(), |x, _| f[x].re * w[x]);
        let im = DVector::from_fn(f.len(), |x, _| f[x].im * w[x]);
        let cr = self.eigenvectors.tr_mul(&re);
        let ci = self.eigenvectors.tr_mul(&im);
        DVector::from_fn(cr.len(), |i, _| Complex64::new(cr[i], ci[i]))
    }

    pub fn coefficients_real(&self, f: &RVector) -> RVector {
        let w = self.space.weights();
        let fw = DVector::from_fn(f.len(), |x, _| f[x] * w[x]);
        self.eigenvectors.tr_mul(&fw)
    }

    /// `Σ_i c_i u_i`.
    pub fn synthesize(&self, coeffs: &CVector) -> CVector {
        let re = coeffs.map(|c| c.re);
        let im = coeffs.map(|c| c.im);
        let fr = &self.eigenvectors * re;
        let fi = &self.eigenvectors * im;
        DVector::from_fn(fr.len(), |x, _| Complex64::new(fr[x], fi[x]))
    }

    pub fn synthesize_real(&self, coeffs: &RVector) -> RVector {
        &self.eigenvectors * coeffs
    }

    /// `m(λ_i)` for every eigenvalue; fails if `m` is not finite somewhere.
    pub fn multiplier_values(&self, m: &Multiplier) -> Result<Vec<Complex64>> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let v = m.eval(l);
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::MultiplierDomainError(l))
                }
            })
            .collect()
    }

    /// `m(L) f = Σ_i m(λ_i) u_i ⟨u_i, f⟩_μ`.
    pub fn apply_function(&self, m: &Multiplier, f: &CVector) -> Result<CVector> {
        let vals = self.multiplier_values(m)?;
        let mut c = self.coefficients(f);
        for (ci, v) in c.iter_mut().zip(&vals) {
            *ci *= v;
        }
        Ok(self.synthesize(&c))
    }

    /// Real-valued calculus for a plain closure.
    pub fn apply_real<F: Fn(f64) -> f64>(&self, m: F, f: &RVector) -> RVector {
        let mut c = self.coefficients_real(f);
        for (ci, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *ci *= m(l);
        }
        self.synthesize_real(&c)
    }

    /// Complex vector through a real closure.
    pub fn apply_real_fn<F: Fn(f64) -> f64>(&self, m: F, f: &CVector) -> CVector {
        let mut c = self.coefficients(f);
        for (ci, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *ci *= m(l);
        }
        self.synthesize(&c)
    }

    /// Kernel `K[x][y] = Σ_i m(λ_i) u_i(x) u_i(y)` of `m(L)`.
    pub fn kernel_of_function(&self, m: &Multiplier) -> Result<CMatrix> {
        let vals = self.multiplier_values(m)?;
        let re = self.weighted_outer(vals.iter().map(|v| v.re));
        let n = re.nrows();
        if vals.iter().all(|v| v.im == 0.0) {
            return Ok(re.map(|x| Complex64::new(x, 0.0)));
        }
        let im = self.weighted_outer(vals.iter().map(|v| v.im));
        Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(re[(i, j)], im[(i, j)])))
    }

    pub fn kernel_real<F: Fn(f64) -> f64>(&self, m: F) -> RMatrix {
        self.weighted_outer(self.eigenvalues.iter().map(|&l| m(l)))
    }

    /// Heat kernel `T_t(x, y)` of `e^{-tL}`.
    pub fn heat_kernel(&self, t: f64) -> Result<RMatrix> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("heat time must be positive, got {t}")));
        }
        Ok(self.kernel_real(|l| (-t * l).exp()))
    }

    /// Kernel of `∂_t^k T_t = (-L)^k e^{-tL}`.
    pub fn heat_derivative_kernel(&self, t: f64, k: u32) -> Result<RMatrix> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("heat time must be positive, got {t}")));
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Ok(self.kernel_real(|l| sign * l.powi(k as i32) * (-t * l).exp()))
    }

    /// Kernel of `∂_t^k e^{-tL}` for the whole semigroup: for `k = 0` the
    /// projection onto the deflated kernel is added back, since `e^{-tL}`
    /// acts there as the identity. Without deflation this equals
    /// [`heat_derivative_kernel`](Self::heat_derivative_kernel).
    pub fn semigroup_kernel(&self, t: f64, k: u32) -> Result<RMatrix> {
        let mut kern = self.heat_derivative_kernel(t, k)?;
        if k == 0 && self.deflated > 0 {
            kern += &self.null_vectors * self.null_vectors.transpose();
        }
        Ok(kern)
    }

    /// Bound on the entrywise round-off of a kernel built from spectral values `vals`.
    pub(crate) fn kernel_noise_floor<I: IntoIterator<Item = f64>>(&self, vals: I) -> f64 {
        let s: f64 = vals
            .into_iter()
            .zip(&self.sup_norms)
            .map(|(v, u)| v.abs() * u * u)
            .sum();
        64.0 * f64::EPSILON * s * (self.space.n() as f64).sqrt()
    }

    fn weighted_outer<I: Iterator<Item = f64>>(&self, vals: I) -> RMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, v) in scaled.column_iter_mut().zip(vals) {
            col *= v;
        }
        scaled * self.eigenvectors.transpose()
    }

    /// μ-weighted inner product `Σ f conj(g) μ`.
    pub fn inner(&self, f: &CVector, g: &CVector) -> Complex64 {
        inner_mu(self.space.weights(), f, g)
    }

    pub fn norm(&self, f: &CVector) -> f64 {
        norm_mu(self.space.weights(), f)
    }
}

/// Applies a kernel to a function: `(Kf)(x) = Σ_y K[x][y] f(y) μ(y)`.
pub fn apply_kernel(space: &Space, kernel: &CMatrix, f: &CVector) -> CVector {
    let fw = DVector::from_fn(f.len(), |y, _| f[y] * space.weight(y));
    kernel * fw
}

/// μ-weighted composition of kernels, `(K1 ∘ K2)(x, y) = Σ_z K1(x, z) K2(z, y) μ(z)`.
pub fn compose_kernels(space: &Space, k1: &RMatrix, k2: &RMatrix) -> RMatrix {
    let mut scaled = k1.clone();
    for (z, mut col) in scaled.column_iter_mut().enumerate() {
        col *= space.weight(z);
    }
    scaled * k2
}

pub fn inner_mu(weights: &[f64], f: &CVector, g: &CVector) -> Complex64 {
    f.iter()
        .zip(g.iter())
        .zip(weights)
        .map(|((a, b), w)| a * b.conj() * *w)
        .sum()
}

pub fn norm_mu(weights: &[f64], f: &CVector) -> f64 {
    f.iter()
        .zip(weights)
        .map(|(a, w)| a.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

/// L² norm over a subset of points.
pub fn norm_mu_on(weights: &[f64], f: &CVector, set: &[usize]) -> f64 {
    set.iter().map(|&x| f[x].norm_sqr() * weights[x]).sum::<f64>().sqrt()
}

pub(crate) fn real_times_complex(a: &RMatrix, f: &CVector) -> CVector {
    let re = a * f.map(|c| c.re);
    let im = a * f.map(|c| c.im);
    DVector::from_fn(re.len(), |i, _| Complex64::new(re[i], im[i]))
}
