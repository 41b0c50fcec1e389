//! The auxiliary multipliers `Φ_t^{⟨N⟩}(λ) = (t²λ)^N e^{-t²λ} m(λ)`, their
//! cone suprema `Θ_j`, and the dyadic pieces `ñ_j`.

use rayon::prelude::*;

use super::partition::Partition;
use super::sobolev::{sobolev_norm, SobolevGrid};
use super::Multiplier;
use crate::error::{Error, Result};
use crate::space::Space;
use crate::spectral::{weighted_row_column_sups, SpectralDecomposition};
use crate::{CMatrix, Complex64, RMatrix};

fn check_order(n: u32) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("N must be 1 or 2, got {n}")))
    }
}

pub fn phi_multiplier(m: &Multiplier, t: f64, n: u32) -> Multiplier {
    let m = m.clone();
    Multiplier::from_fn(format!("phi[{}](t={t},N={n})", m.name()), move |l| {
        let u = t * t * l;
        m.eval(l) * (u.powi(n as i32) * (-u).exp())
    })
}

/// Kernel of `Φ_t^{⟨N⟩}(L)`.
pub fn phi_kernel(decomp: &SpectralDecomposition, m: &Multiplier, t: f64, n: u32) -> Result<CMatrix> {
    check_order(n)?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    decomp.kernel_of_function(&phi_multiplier(m, t, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Report {
    /// `sup_t max(row form, column form)`.
    pub sup: f64,
    pub t_at_sup: f64,
    /// `(t, row form, column form)` for every probed `t`.
    pub per_t: Vec<(f64, f64, f64)>,
}

/// Empirical `C''`: the largest ω(β)-weighted Schur form of `Φ_t^{⟨N⟩}(L)`
/// with distances measured in units of `t`.
pub fn verify_prop1(
    space: &Space,
    decomp: &SpectralDecomposition,
    m: &Multiplier,
    beta: f64,
    t_grid: &[f64],
    n: u32,
) -> Result<Prop1Report> {
    check_order(n)?;
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    let per_t = t_grid
        .par_iter()
        .map(|&t| {
            let k = phi_kernel(decomp, m, t, n)?;
            let (row, col) = weighted_row_column_sups(space, &k, beta, t)?;
            Ok((t, row, col))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut sup, mut t_at_sup) = (f64::NEG_INFINITY, t_grid[0]);
    for &(t, r, c) in &per_t {
        if r.max(c) > sup {
            sup = r.max(c);
            t_at_sup = t;
        }
    }
    Ok(Prop1Report { sup, t_at_sup, per_t })
}

/// `Θ_j[x][y] = max_{t, d(x, x') < t} |Φ_t^{⟨N⟩}(L)(x', y)|` over the times
/// `t = 2^{j + s/substeps}`, `s = 0..substeps`.
pub fn theta_kernel(
    space: &Space,
    decomp: &SpectralDecomposition,
    m: &Multiplier,
    j: i32,
    n: u32,
    t_substeps: usize,
) -> Result<RMatrix> {
    if t_substeps < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 substeps, got {t_substeps}")));
    }
    let size = space.n();
    let times: Vec<f64> = (0..t_substeps)
        .map(|s| 2f64.powf(j as f64 + s as f64 / t_substeps as f64))
        .collect();
    let parts = times
        .par_iter()
        .map(|&t| {
            let k = phi_kernel(decomp, m, t, n)?;
            let abs = k.map(|v| v.norm());
            let mut theta = RMatrix::zeros(size, size);
            for x in 0..size {
                let ball = space.ball_members(x, t);
                for y in 0..size {
                    theta[(x, y)] = ball.iter().map(|&xp| abs[(xp, y)]).fold(0.0, f64::max);
                }
            }
            Ok(theta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts
        .into_iter()
        .reduce(|a, b| a.zip_map(&b, f64::max))
        .expect("at least four substeps"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Report {
    pub sup: f64,
    /// `(j, sup_y Σ_x Θ_j(x, y) (1 + d(x, y)/2^j)^β μ(x))`.
    pub per_j: Vec<(i32, f64)>,
}

/// Empirical `C'`: the weighted column integral of `Θ_j` maximised over
/// `y` and `j`.
pub fn verify_lemma3(
    space: &Space,
    decomp: &SpectralDecomposition,
    m: &Multiplier,
    beta: f64,
    j_range: (i32, i32),
    n: u32,
    t_substeps: usize,
) -> Result<Lemma3Report> {
    if j_range.0 > j_range.1 {
        return Err(Error::InvalidArgument(format!("empty j range {:?}", j_range)));
    }
    let mut per_j = Vec::new();
    for j in j_range.0..=j_range.1 {
        let theta = theta_kernel(space, decomp, m, j, n, t_substeps)?;
        let (_, col) = weighted_row_column_sups(space, &theta, beta, 2f64.powi(j))?;
        per_j.push((j, col));
    }
    let sup = per_j.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Lemma3Report { sup, per_j })
}

/// Octaves `j` for which `Φ_t`, `t ∈ [2^j, 2^{j+1})`, sees the spectrum
/// non-trivially: from `t ≈ 2^{-4}/√λ_n` up to `t ≈ 8/√λ₁`, beyond which
/// `e^{-t²λ} < e^{-64}`.
pub fn spectral_j_range(decomp: &SpectralDecomposition) -> (i32, i32) {
    let lo = (1.0 / decomp.lambda_max().sqrt()).log2().floor() as i32 - 4;
    let hi = (1.0 / decomp.lambda_min().sqrt()).log2().ceil() as i32 + 3;
    (lo, hi)
}

/// `ñ_j(λ) = ψ(λ) (2^j λ)^N e^{-2^j λ} m(2^j λ)`.
pub fn dyadic_piece<'a>(m: &'a Multiplier, partition: &Partition, j: i32, n: u32) -> impl Fn(f64) -> Complex64 + Sync + 'a {
    let p = *partition;
    move |l: f64| {
        let psi = p.psi(l);
        if psi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let s = 2f64.powi(j) * l;
        m.eval(s) * (psi * s.powi(n as i32) * (-s).exp())
    }
}

/// Dyadic piece norms `‖ñ_j‖_{W^{∞,α}}` against the envelope `2^{-j}`
/// (`j >= 0`) or `2^{jN}` (`j < 0`), with the single constant that covers all `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicNormFit {
    pub c: f64,
    /// `(j, norm, envelope)`.
    pub per_j: Vec<(i32, f64, f64)>,
}

impl DyadicNormFit {
    /// Whether each norm stays within `(1 + slack) C · envelope`.
    pub fn holds_with(&self, c: f64, slack: f64) -> bool {
        self.per_j.iter().all(|&(_, v, e)| v <= (1.0 + slack) * c * e)
    }
}

pub fn dyadic_envelope(j: i32, n: u32) -> f64 {
    if j >= 0 {
        2f64.powi(-j)
    } else {
        2f64.powi(j * n as i32)
    }
}

pub fn dyadic_piece_norms(
    m: &Multiplier,
    partition: &Partition,
    n: u32,
    j_range: (i32, i32),
    grid: &SobolevGrid,
) -> Result<DyadicNormFit> {
    check_order(n)?;
    let js: Vec<i32> = (j_range.0..=j_range.1).collect();
    let per_j = js
        .par_iter()
        .map(|&j| {
            let f = dyadic_piece(m, partition, j, n);
            let v = sobolev_norm(|x| if x > 0.0 { f(x) } else { Complex64::new(0.0, 0.0) }, grid)?;
            Ok((j, v, dyadic_envelope(j, n)))
        })
        .collect::<Result<Vec<_>>>()?;
    let c = per_j.iter().map(|&(_, v, e)| v / e).fold(0.0, f64::max);
    Ok(DyadicNormFit { c, per_j })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn single_point_theta() {
        let space = std::sync::Arc::new(Space::new(nalgebra::DMatrix::zeros(1, 1), vec![2.0]).unwrap());
        let op = crate::spectral::Operator::new(space.clone(), nalgebra::DMatrix::from_element(1, 1, 0.5), None).unwrap();
        let dec = op.decompose().unwrap();
        let lambda = dec.eigenvalues()[0];
        let theta = theta_kernel(&space, &dec, &Multiplier::identity(), 0, 1, 8).unwrap();
        let expect = (0..8)
            .map(|s| {
                let t = 2f64.powf(s as f64 / 8.0);
                let u = t * t * lambda;
                u * (-u).exp() / 2.0
            })
            .fold(0.0, f64::max);
        assert!((theta[(0, 0)] - expect).abs() < 1e-14);
    }

    #[test]
    fn theta_dominates_first_member() {
        let (space, op) = models::cycle_laplacian(16).unwrap();
        let dec = op.decompose().unwrap();
        let m = Multiplier::identity();
        let theta = theta_kernel(&space, &dec, &m, 1, 2, 4).unwrap();
        let phi = phi_kernel(&dec, &m, 2.0, 2).unwrap();
        for x in 0..16 {
            for y in 0..16 {
                assert!(theta[(x, y)] >= phi[(x, y)].norm());
            }
        }
    }

    #[test]
    fn bad_orders_rejected() {
        let (_, op) = models::cycle_laplacian(8).unwrap();
        let dec = op.decompose().unwrap();
        assert!(phi_kernel(&dec, &Multiplier::identity(), 1.0, 3).is_err());
        assert!(phi_kernel(&dec, &Multiplier::identity(), 0.0, 1).is_err());
    }
}
