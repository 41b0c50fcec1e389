//! The conical square function `S_h` and the `H¹_L` norm.

use rayon::prelude::*;

use super::quadrature::{truncation_error_bound, ConeQuadrature};
use crate::error::{Error, Result};
use crate::space::Space;
use crate::spectral::SpectralDecomposition;
use crate::{CMatrix, CVector, RVector};

/// Largest allowed truncation error relative to `‖f‖₂`.
const TRUNCATION_TOL: f64 = 1e-6;

/// Ball volumes `V(x, t_k)` for every quadrature node and point.
struct Cones {
    volumes: Vec<Vec<f64>>,
}

impl Cones {
    fn new(space: &Space, quad: &ConeQuadrature) -> Self {
        let volumes = quad
            .nodes()
            .par_iter()
            .map(|&t| (0..space.n()).map(|x| space.volume_of(x, t)).collect())
            .collect();
        Cones { volumes }
    }
}

/// Columns `t_k² L e^{-t_k² L} f` for every quadrature node.
fn heat_derivative_columns(decomp: &SpectralDecomposition, quad: &ConeQuadrature, f: &CVector) -> CMatrix {
    let c = decomp.coefficients(f);
    let lambdas = decomp.eigenvalues();
    let nodes = quad.nodes();
    let coeffs = CMatrix::from_fn(lambdas.len(), nodes.len(), |i, k| {
        let u = nodes[k] * nodes[k] * lambdas[i];
        c[i] * (u * (-u).exp())
    });
    let u = decomp.eigenvectors().map(|v| crate::Complex64::new(v, 0.0));
    u * coeffs
}

fn check_truncation(space: &Space, decomp: &SpectralDecomposition, quad: &ConeQuadrature, f: &CVector) -> Result<()> {
    let norm = decomp.norm(f);
    let bound = truncation_error_bound(space, decomp, quad, norm);
    if bound > TRUNCATION_TOL * norm {
        return Err(Error::QuadratureTooCoarse(format!(
            "tail bound {bound:.3e} exceeds {TRUNCATION_TOL:e} * ‖f‖ = {:.3e}",
            TRUNCATION_TOL * norm
        )));
    }
    Ok(())
}

/// `S_h f(x) = (Σ_k w_k Σ_{y in cone} |t_k² L e^{-t_k² L} f(y)|² μ(y)/V(x, t_k))^{1/2}`.
pub fn square_function(space: &Space, decomp: &SpectralDecomposition, f: &CVector, quad: &ConeQuadrature) -> Result<RVector> {
    SquareFunction::new(space, decomp, quad)?.apply(f)
}

/// `‖S_h f‖_{L¹(μ)}`.
pub fn h1_norm(space: &Space, decomp: &SpectralDecomposition, f: &CVector, quad: &ConeQuadrature) -> Result<f64> {
    SquareFunction::new(space, decomp, quad)?.h1_norm(f)
}

/// Square function bound to one space, operator and quadrature, with the
/// cone geometry cached for repeated evaluation.
pub struct SquareFunction<'a> {
    space: &'a Space,
    decomp: &'a SpectralDecomposition,
    quad: &'a ConeQuadrature,
    cones: Cones,
}

impl<'a> SquareFunction<'a> {
    pub fn new(space: &'a Space, decomp: &'a SpectralDecomposition, quad: &'a ConeQuadrature) -> Result<Self> {
        if space.n() != decomp.space().n() {
            return Err(Error::DimensionMismatch("space and decomposition disagree".into()));
        }
        Ok(SquareFunction { space, decomp, quad, cones: Cones::new(space, quad) })
    }

    pub fn quadrature(&self) -> &ConeQuadrature {
        self.quad
    }

    pub fn apply(&self, f: &CVector) -> Result<RVector> {
        let (small, large) = self.apply_split(f, f64::INFINITY)?;
        Ok(small.zip_map(&large, |a, b| (a + b).sqrt()))
    }

    /// The squared square function split by cone time: contributions of
    /// nodes `t < split` and of the rest, so `S_h f = (small + large)^{1/2}`.
    pub fn apply_split(&self, f: &CVector, split: f64) -> Result<(RVector, RVector)> {
        if f.len() != self.space.n() {
            return Err(Error::DimensionMismatch(format!("function has {} entries, space has {}", f.len(), self.space.n())));
        }
        check_truncation(self.space, self.decomp, self.quad, f)?;
        let cols = heat_derivative_columns(self.decomp, self.quad, f);
        let n = self.space.n();
        let weights = self.quad.weights();
        let parts: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|x| {
                let (mut small, mut large) = (0.0, 0.0);
                for (k, &t) in self.quad.nodes().iter().enumerate() {
                    let mut inner = 0.0;
                    for y in 0..n {
                        if self.quad.in_cone(self.space.dist(x, y), t) {
                            inner += cols[(y, k)].norm_sqr() * self.space.weight(y);
                        }
                    }
                    let v = weights[k] * inner / self.cones.volumes[k][x];
                    if t < split {
                        small += v;
                    } else {
                        large += v;
                    }
                }
                (small, large)
            })
            .collect();
        Ok((
            RVector::from_iterator(n, parts.iter().map(|p| p.0)),
            RVector::from_iterator(n, parts.iter().map(|p| p.1)),
        ))
    }

    pub fn h1_norm(&self, f: &CVector) -> Result<f64> {
        let s = self.apply(f)?;
        Ok(s.iter().zip(self.space.weights()).map(|(v, w)| v * w).sum())
    }

    /// `∫_U S_h f dμ` over a subset of points.
    pub fn h1_norm_on(&self, f: &CVector, set: &[usize]) -> Result<f64> {
        let s = self.apply(f)?;
        Ok(set.iter().map(|&x| s[x] * self.space.weight(x)).sum())
    }

    /// Constant `C_S` with `‖S_h f‖₂ <= C_S ‖f‖₂`:
    /// `C_S² = max_{y,k} Σ_{x : y in cone(x, t_k)} μ(x)/V(x, t_k) · max_i q(λ_i)`
    /// where `q` is the scalar quadrature profile.
    pub fn l2_bound(&self) -> f64 {
        let n = self.space.n();
        let mut overlap = 0.0_f64;
        for (k, &t) in self.quad.nodes().iter().enumerate() {
            for y in 0..n {
                let col: f64 = (0..n)
                    .filter(|&x| self.quad.in_cone(self.space.dist(x, y), t))
                    .map(|x| self.space.weight(x) / self.cones.volumes[k][x])
                    .sum();
                overlap = overlap.max(col);
            }
        }
        let q = self
            .decomp
            .eigenvalues()
            .iter()
            .map(|&l| self.quad.scalar_profile(l))
            .fold(0.0, f64::max);
        (overlap * q).sqrt()
    }
}
