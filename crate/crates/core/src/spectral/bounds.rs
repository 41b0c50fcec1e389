//! Fitting of Gaussian and Davies-Gaffney constants, and ω(β)-weighted
//! Schur norms of kernels.

use nalgebra::{ComplexField, DMatrix};
use rayon::prelude::*;

use super::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::space::Space;

/// Where the fitted inequality is tight.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundWitness {
    Points { x: usize, y: usize, t: f64 },
    Sets { pair: usize, t: f64 },
}

/// Constants `(C, c)` of an inequality of the form
/// `value <= C · envelope · exp(-d² / (c t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBound {
    pub c_const: f64,
    pub c_scale: f64,
    pub worst_witness: BoundWitness,
    /// `1 - max(value / bound)` over all probes at the reported constants.
    pub margin: f64,
    /// `(c, C(c))` for every `c` on the grid.
    pub curve: Vec<(f64, f64)>,
    pub probes: usize,
    /// Probes dropped because the value sat below the round-off floor.
    pub skipped: usize,
}

struct Probe {
    log_value: f64,
    d2_over_t: f64,
    witness: BoundWitness,
}

/// Scale grid for `c`: 24 log-spaced values per decade over four decades
/// centred on `center`.
pub fn c_grid(center: f64) -> Vec<f64> {
    (0..=96).map(|k| center * 10f64.powf((k as f64 - 48.0) / 24.0)).collect()
}

const C_CENTER: f64 = 4.0;
/// A larger `c` is only worth taking if it lowers `C` by more than this factor.
const KNEE: f64 = 1.05;

fn fit(probes: Vec<Probe>, skipped: usize) -> Result<FittedBound> {
    if probes.is_empty() {
        return Err(Error::UnboundedFit("no probe rose above the round-off floor".into()));
    }
    let grid = c_grid(C_CENTER);
    let curve: Vec<(f64, f64, usize)> = grid
        .par_iter()
        .map(|&c| {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (i, p) in probes.iter().enumerate() {
                let v = p.log_value + p.d2_over_t / c;
                if v > best {
                    best = v;
                    arg = i;
                }
            }
            (c, best.exp(), arg)
        })
        .collect();
    let floor = curve.last().map(|c| c.1).unwrap();
    if !floor.is_finite() {
        return Err(Error::UnboundedFit(format!("constant is {floor} even at c = {}", grid[grid.len() - 1])));
    }
    // C(c) is nonincreasing in c; report the smallest c whose constant is
    // already within the knee factor of the large-c limit.
    let (c_scale, c_const, arg) = *curve
        .iter()
        .find(|(_, v, _)| v.is_finite() && *v <= KNEE * floor)
        .unwrap();
    let worst = probes
        .iter()
        .map(|p| (p.log_value + p.d2_over_t / c_scale).exp() / c_const)
        .fold(0.0_f64, f64::max);
    Ok(FittedBound {
        c_const,
        c_scale,
        worst_witness: probes[arg].witness.clone(),
        margin: 1.0 - worst,
        curve: curve.iter().map(|&(c, v, _)| (c, v)).collect(),
        probes: probes.len(),
        skipped,
    })
}

fn check_times(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("heat time must be positive, got {t}")));
    }
    Ok(())
}

/// Fits `|∂_t^k T_t(x, y)| <= C t^{-k} V(x, √t)^{-1} exp(-d(x, y)² / (c t))`
/// over every pair of points and every time on the grid. Uses the full
/// semigroup, kernel modes included.
pub fn check_gaussian_bounds(
    space: &Space,
    decomp: &SpectralDecomposition,
    t_grid: &[f64],
    k: u32,
) -> Result<FittedBound> {
    check_times(t_grid)?;
    let n = space.n();
    let per_t: Vec<Result<(Vec<Probe>, usize)>> = t_grid
        .par_iter()
        .map(|&t| {
            let kern = decomp.semigroup_kernel(t, k)?;
            let floor = decomp.kernel_noise_floor(decomp.eigenvalues().iter().map(|l| l.powi(k as i32) * (-t * l).exp()));
            let mut probes = Vec::with_capacity(n * n);
            let mut skipped = 0;
            for x in 0..n {
                let scale = t.powi(k as i32) * space.volume_of(x, t.sqrt());
                for y in 0..n {
                    let v = kern[(x, y)].abs();
                    if v <= floor {
                        skipped += 1;
                        continue;
                    }
                    let d = space.dist(x, y);
                    probes.push(Probe {
                        log_value: (v * scale).ln(),
                        d2_over_t: d * d / t,
                        witness: BoundWitness::Points { x, y, t },
                    });
                }
            }
            Ok((probes, skipped))
        })
        .collect();
    let mut probes = Vec::new();
    let mut skipped = 0;
    for r in per_t {
        let (p, s) = r?;
        probes.extend(p);
        skipped += s;
    }
    fit(probes, skipped)
}

/// Fits `|⟨T_t f₁, f₂⟩| <= C exp(-dist(U₁, U₂)² / (c t)) ‖f₁‖ ‖f₂‖` for
/// functions supported in each pair of sets. The supremum over `f₁, f₂` is
/// the operator norm of the restricted kernel block, computed exactly.
pub fn check_davies_gaffney(
    space: &Space,
    decomp: &SpectralDecomposition,
    ball_pairs: &[(Vec<usize>, Vec<usize>)],
    t_grid: &[f64],
) -> Result<FittedBound> {
    check_times(t_grid)?;
    for (i, (a, b)) in ball_pairs.iter().enumerate() {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidArgument(format!("set pair {i} has an empty member")));
        }
        if a.iter().chain(b).any(|&x| x >= space.n()) {
            return Err(Error::DimensionMismatch(format!("set pair {i} refers to a missing point")));
        }
    }
    let per_t: Vec<Result<(Vec<Probe>, usize)>> = t_grid
        .par_iter()
        .map(|&t| {
            let kern = decomp.semigroup_kernel(t, 0)?;
            let floor = decomp.kernel_noise_floor(decomp.eigenvalues().iter().map(|l| (-t * l).exp()));
            let mut probes = Vec::new();
            let mut skipped = 0;
            for (pair, (u1, u2)) in ball_pairs.iter().enumerate() {
                let block = DMatrix::from_fn(u2.len(), u1.len(), |a, b| {
                    let (x, y) = (u2[a], u1[b]);
                    space.weight(x).sqrt() * kern[(x, y)] * space.weight(y).sqrt()
                });
                let sigma = block.singular_values().max();
                // Entrywise noise `floor · √μ(x)μ(y)` bounds the block's Frobenius noise by this.
                let block_floor = floor
                    * (u1.iter().map(|&y| space.weight(y)).sum::<f64>() * u2.iter().map(|&x| space.weight(x)).sum::<f64>()).sqrt();
                if sigma <= block_floor {
                    skipped += 1;
                    continue;
                }
                let d = space.set_distance(u1, u2);
                probes.push(Probe {
                    log_value: sigma.ln(),
                    d2_over_t: d * d / t,
                    witness: BoundWitness::Sets { pair, t },
                });
            }
            Ok((probes, skipped))
        })
        .collect();
    let mut probes = Vec::new();
    let mut skipped = 0;
    for r in per_t {
        let (p, s) = r?;
        probes.extend(p);
        skipped += s;
    }
    fit(probes, skipped)
}

/// Row and column forms of the ω(β)-weighted Schur norm:
/// `sup_x Σ_y |k(x, y)| (1 + d(x, y)/scale)^β μ(y)` and the same with the
/// roles of `x` and `y` exchanged.
pub fn weighted_row_column_sups<T>(space: &Space, kernel: &DMatrix<T>, beta: f64, scale: f64) -> Result<(f64, f64)>
where
    T: ComplexField<RealField = f64>,
{
    if !(beta >= 0.0) || !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("need beta >= 0 and scale > 0, got {beta}, {scale}")));
    }
    let n = space.n();
    if kernel.nrows() != n || kernel.ncols() != n {
        return Err(Error::DimensionMismatch(format!("kernel is {}x{}, space has {n} points", kernel.nrows(), kernel.ncols())));
    }
    let weighted = |x: usize, y: usize| -> f64 {
        let w = if beta == 0.0 { 1.0 } else { (1.0 + space.dist(x, y) / scale).powf(beta) };
        kernel[(x, y)].clone().modulus() * w
    };
    let row = (0..n)
        .map(|x| (0..n).map(|y| weighted(x, y) * space.weight(y)).sum::<f64>())
        .fold(0.0, f64::max);
    let col = (0..n)
        .map(|y| (0..n).map(|x| weighted(x, y) * space.weight(x)).sum::<f64>())
        .fold(0.0, f64::max);
    Ok((row, col))
}

/// Sum of the row and column sups from [`weighted_row_column_sups`].
pub fn weighted_kernel_norm<T>(space: &Space, kernel: &DMatrix<T>, beta: f64, scale: f64) -> Result<f64>
where
    T: ComplexField<RealField = f64>,
{
    let (r, c) = weighted_row_column_sups(space, kernel, beta, scale)?;
    Ok(r + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::spectral::Operator;
    use std::sync::Arc;

    #[test]
    fn grid_has_four_decades() {
        let g = c_grid(4.0);
        assert_eq!(g.len(), 97);
        assert!((g[0] - 0.04).abs() < 1e-12);
        assert!((g[96] - 400.0).abs() < 1e-9);
        assert!((g[48] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_constant_is_one() {
        let space = Arc::new(Space::new(DMatrix::zeros(1, 1), vec![2.0]).unwrap());
        let op = Operator::new(space.clone(), DMatrix::from_element(1, 1, 1e-3), None).unwrap();
        let dec = op.decompose().unwrap();
        let fit = check_gaussian_bounds(&space, &dec, &[1e-6, 1e-5], 0).unwrap();
        assert!((fit.c_const - 1.0).abs() < 1e-8);
    }

    #[test]
    fn identity_kernel_norm_is_two() {
        let (space, _) = models::cycle_laplacian(8).unwrap();
        let k = DMatrix::from_fn(8, 8, |i, j| if i == j { 1.0 / space.weight(j) } else { 0.0 });
        assert!((weighted_kernel_norm(&space, &k, 3.0, 0.7).unwrap() - 2.0).abs() < 1e-14);
        assert!((weighted_kernel_norm(&space, &k, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn touching_sets_fit_with_unit_constant() {
        let (space, op) = models::path_laplacian(6).unwrap();
        let dec = op.decompose().unwrap();
        let pairs = vec![(vec![0, 1, 2], vec![1, 2, 3])];
        let fit = check_davies_gaffney(&space, &dec, &pairs, &[0.1, 1.0, 10.0]).unwrap();
        assert!(fit.c_const <= 1.0 + 1e-12);
    }
}
