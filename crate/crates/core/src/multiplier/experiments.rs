//! End-to-end multiplier experiments on atom ensembles.
//!
//! `theorem1_experiment` measures `‖m(L)a‖_{H¹_L}` over `(1,2,1)`-atoms and
//! splits it into the near field `2B` and the far field by time scale.
//! `theorem2_experiment` maps `(1,2,2M)`-atoms through `m(√L)` and checks that
//! the image is a multiple of a `(1,2,M,ε)`-molecule, reproducing the dyadic
//! split used to prove it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::Partition;
use super::sobolev::{hormander_constant, hormander_t_grid, sobolev_norm, HormanderReport, LpExponent, SobolevGrid};
use super::Multiplier;
use crate::error::{Error, Result};
use crate::hardy::{make_atom, validate_molecule, Atom, BallSpec, ConeQuadrature, Molecule, SquareFunction};
use crate::space::Space;
use crate::spectral::{norm_mu, Operator, SpectralDecomposition};
use crate::{CVector, Complex64};

/// One atom of an ensemble: ball and the seed for its random direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub center: usize,
    pub radius: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Row {
    pub atom_id: usize,
    pub r: f64,
    pub order: usize,
    pub h1_in: f64,
    pub h1_out: f64,
    /// `∫_{B(y₀, 2r)} S_h(m(L)a) dμ`.
    pub nearfield: f64,
    /// `∫` of `S_h(m(L)a)` outside `B(y₀, 2r)`.
    pub farfield: f64,
    /// Far field restricted to the cone times `t < 2^{⌊log₂ r⌋ + 1}`.
    pub farfield_small_t: f64,
    /// Far field restricted to the remaining times.
    pub farfield_large_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub rows: Vec<Theorem1Row>,
    /// Atoms that could not be built, with the reason.
    pub skipped: Vec<(usize, String)>,
    pub ensemble_max: f64,
    /// `(r, max h1_out over atoms of that radius)` in first-seen order.
    pub per_radius_max: Vec<(f64, f64)>,
    pub hormander: HormanderReport,
}

fn per_radius_max<I: Iterator<Item = (f64, f64)>>(items: I) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (r, v) in items {
        match out.iter_mut().find(|(rr, _)| *rr == r) {
            Some(e) => e.1 = e.1.max(v),
            None => out.push((r, v)),
        }
    }
    out
}

/// `‖m(L)a‖_{H¹_L}` and its near/far split for an ensemble of `(1,2,1)`-atoms.
pub fn theorem1_experiment(
    op: &Operator,
    decomp: &SpectralDecomposition,
    m: &Multiplier,
    alpha: f64,
    atoms: &[AtomSpec],
    quad: &ConeQuadrature,
    partition: &Partition,
) -> Result<Theorem1Report> {
    let space: &Space = op.space();
    m.sup_on(decomp.lambda_min(), decomp.lambda_max())?;
    let sq = SquareFunction::new(space, decomp, quad)?;
    let built: Vec<std::result::Result<Theorem1Row, (usize, Error)>> = atoms
        .par_iter()
        .enumerate()
        .map(|(id, spec)| {
            let ball = BallSpec { center: spec.center, radius: spec.radius };
            let atom = make_atom(op, decomp, ball, 1, spec.seed).map_err(|e| (id, e))?;
            theorem1_row(space, decomp, &sq, m, id, &atom).map_err(|e| (id, e))
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for r in built {
        match r {
            Ok(row) => rows.push(row),
            Err((id, e @ Error::AtomInfeasible(_))) => skipped.push((id, e.to_string())),
            Err((_, e)) => return Err(e),
        }
    }
    let ensemble_max = rows.iter().map(|r| r.h1_out).fold(0.0, f64::max);
    let per_radius = per_radius_max(rows.iter().map(|r| (r.r, r.h1_out)));
    let grid = SobolevGrid::hormander(alpha, LpExponent::Infinity);
    let t_grid = hormander_t_grid(decomp.lambda_min(), decomp.lambda_max());
    let hormander = hormander_constant(m, |x| partition.eta(x), &grid, &t_grid)?;
    Ok(Theorem1Report { rows, skipped, ensemble_max, per_radius_max: per_radius, hormander })
}

fn theorem1_row(
    space: &Space,
    decomp: &SpectralDecomposition,
    sq: &SquareFunction,
    m: &Multiplier,
    id: usize,
    atom: &Atom,
) -> Result<Theorem1Row> {
    let r = atom.ball.radius;
    let out = decomp.apply_function(m, &atom.a)?;
    let h1_in = sq.h1_norm(&atom.a)?;
    let split = 2f64.powi(r.log2().floor() as i32 + 1);
    let (small, large) = sq.apply_split(&out, split)?;
    let near_set = space.ball_members(atom.ball.center, 2.0 * r);
    let (mut h1_out, mut nearfield, mut far_small, mut far_large) = (0.0, 0.0, 0.0, 0.0);
    for x in 0..space.n() {
        let w = space.weight(x);
        let s = (small[x] + large[x]).sqrt() * w;
        h1_out += s;
        if near_set.contains(&x) {
            nearfield += s;
        } else {
            far_small += small[x].sqrt() * w;
            far_large += large[x].sqrt() * w;
        }
    }
    Ok(Theorem1Row {
        atom_id: id,
        r,
        order: atom.order,
        h1_in,
        h1_out,
        nearfield,
        farfield: h1_out - nearfield,
        farfield_small_t: far_small,
        farfield_large_t: far_large,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem2Options {
    /// `ε` at which the molecule condition is checked.
    pub epsilon: f64,
    /// Growth exponent of the space, used for the tail weight `β = q + 2ε`.
    pub q: f64,
    /// Override of the tail weight exponent.
    pub beta: Option<f64>,
    /// Fails the run if a dyadic piece norm exceeds its reference by more than this factor.
    pub sobolev_gate: f64,
}

impl Default for Theorem2Options {
    fn default() -> Self {
        Theorem2Options { epsilon: 0.1, q: 1.0, beta: None, sobolev_gate: 1.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Row {
    pub atom_id: usize,
    pub r: f64,
    pub order: usize,
    pub h1_in: f64,
    pub h1_out: f64,
    /// `∫_{B(y₀, 2r)} S_h(ã) dμ`.
    pub nearfield: f64,
    pub farfield: f64,
    pub best_epsilon: f64,
    /// Molecule multiple at the target `ε`.
    pub multiple: f64,
    pub molecule_passed: bool,
    /// Smallest margin `1 - ‖g‖/budget` over the `g₁`, `g₂` budgets.
    pub g_margin: f64,
    /// Relative error of reassembling `(r²L)^k b̃` from its dyadic pieces.
    pub split_error: f64,
    /// `max_k (∫_{d > 2r} |(r²L)^k b̃|² (d/r)^β dμ)^{1/2} / (r^{2M} μ(B)^{-1/2})`.
    pub tail_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Report {
    pub rows: Vec<Theorem2Row>,
    pub skipped: Vec<(usize, String)>,
    /// `(j, ‖F_j‖_{W^{2,α}} / envelope_j)` for the dyadic pieces of the split.
    pub piece_norms: Vec<(i32, f64)>,
    /// Reference constant from the dilation suprema of the two piece shapes.
    pub piece_reference: f64,
    pub max_multiple: f64,
    pub min_best_epsilon: f64,
}

/// Maps `(1,2,2M)`-atoms through `m(√L)` and validates the molecules.
#[allow(clippy::too_many_arguments)]
pub fn theorem2_experiment(
    op: &Operator,
    decomp: &SpectralDecomposition,
    m: &Multiplier,
    order: usize,
    alpha: f64,
    atoms: &[AtomSpec],
    partition: &Partition,
    quad: &ConeQuadrature,
    options: &Theorem2Options,
) -> Result<Theorem2Report> {
    if order == 0 {
        return Err(Error::InvalidArgument("molecule order M must be at least 1".into()));
    }
    let space: &Space = op.space();
    let m_sqrt = m.of_sqrt();
    m_sqrt.sup_on(decomp.lambda_min(), decomp.lambda_max())?;
    let (piece_norms, piece_reference) = piece_norm_check(decomp, m, order, alpha, partition)?;
    let worst_piece = piece_norms.iter().map(|p| p.1).fold(0.0, f64::max);
    if worst_piece > options.sobolev_gate * piece_reference {
        return Err(Error::SobolevGate(format!(
            "dyadic piece norm {worst_piece:.4e} exceeds {} x reference {piece_reference:.4e}",
            options.sobolev_gate
        )));
    }
    let sq = SquareFunction::new(space, decomp, quad)?;
    let beta = options.beta.unwrap_or(options.q + 2.0 * options.epsilon);
    let built: Vec<std::result::Result<Theorem2Row, (usize, Error)>> = atoms
        .par_iter()
        .enumerate()
        .map(|(id, spec)| {
            let ball = BallSpec { center: spec.center, radius: spec.radius };
            let atom = make_atom(op, decomp, ball, 2 * order, spec.seed).map_err(|e| (id, e))?;
            theorem2_row(space, decomp, &sq, &m_sqrt, order, partition, beta, options.epsilon, id, &atom)
                .map_err(|e| (id, e))
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for r in built {
        match r {
            Ok(row) => rows.push(row),
            Err((id, e @ Error::AtomInfeasible(_))) => skipped.push((id, e.to_string())),
            Err((_, e)) => return Err(e),
        }
    }
    let max_multiple = rows.iter().map(|r| r.multiple).fold(0.0, f64::max);
    let min_best_epsilon = rows.iter().map(|r| r.best_epsilon).fold(f64::INFINITY, f64::min);
    Ok(Theorem2Report { rows, skipped, piece_norms, piece_reference, max_multiple, min_best_epsilon })
}

/// Octaves `j` with `ψ(2^{-j}√λ) != 0` for some eigenvalue.
fn sqrt_octaves(decomp: &SpectralDecomposition) -> (i32, i32) {
    let lo = (decomp.lambda_min().sqrt().log2() - 1.0).floor() as i32;
    let hi = (decomp.lambda_max().sqrt().log2() + 1.0).ceil() as i32;
    (lo, hi)
}

/// `‖F_j‖_{W^{2,α}}` normalised by `1` or `2^{2Mj}`, where
/// `F_j = ψ · m(2^j ·)` (times `(·)^{2M}` below the split), against the
/// dilation suprema of the two shapes. The split index does not matter for
/// the normalised norms, so both shapes are evaluated at every `j`.
fn piece_norm_check(
    decomp: &SpectralDecomposition,
    m: &Multiplier,
    order: usize,
    alpha: f64,
    partition: &Partition,
) -> Result<(Vec<(i32, f64)>, f64)> {
    let grid = SobolevGrid::hormander(alpha, LpExponent::Two);
    let (lo, hi) = sqrt_octaves(decomp);
    let p = *partition;
    let shape = |t: f64, power: i32| {
        move |x: f64| {
            if x <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let psi = p.psi(x);
            if psi == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                m.eval(t * x) * (psi * x.powi(power))
            }
        }
    };
    let power = 2 * order as i32;
    let js: Vec<i32> = (lo..=hi).collect();
    let piece_norms = js
        .par_iter()
        .map(|&j| {
            let t = 2f64.powi(j);
            let a = sobolev_norm(shape(t, 0), &grid)?;
            let b = sobolev_norm(shape(t, power), &grid)?;
            Ok((j, a.max(b)))
        })
        .collect::<Result<Vec<_>>>()?;
    let t_grid = hormander_t_grid(2f64.powi(lo), 2f64.powi(hi));
    let reference = t_grid
        .par_iter()
        .map(|&t| Ok(sobolev_norm(shape(t, 0), &grid)?.max(sobolev_norm(shape(t, power), &grid)?)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((piece_norms, reference))
}

#[allow(clippy::too_many_arguments)]
fn theorem2_row(
    space: &Space,
    decomp: &SpectralDecomposition,
    sq: &SquareFunction,
    m_sqrt: &Multiplier,
    order: usize,
    partition: &Partition,
    beta: f64,
    epsilon: f64,
    id: usize,
    atom: &Atom,
) -> Result<Theorem2Row> {
    let r = atom.ball.radius;
    let y0 = atom.ball.center;
    let w = space.weights();
    let mu_b: f64 = space.ball_members(y0, r).iter().map(|&y| space.weight(y)).sum();
    let lm_b = decomp.apply_real_fn(|l| l.powi(order as i32), &atom.b);
    let b_tilde = decomp.apply_function(m_sqrt, &lm_b)?;
    let a_tilde = decomp.apply_function(m_sqrt, &atom.a)?;
    let mol = Molecule { a_tilde: a_tilde.clone(), b_tilde: b_tilde.clone(), ball: atom.ball, order, epsilon };
    let report = validate_molecule(space, decomp, &mol);

    let mut g_margin = f64::INFINITY;
    let mut split_error = 0.0_f64;
    let mut tail_ratio = 0.0_f64;
    let j0 = -r.log2();
    let (lo, hi) = sqrt_octaves(decomp);
    let scale = r.powi(2 * order as i32) / mu_b.sqrt();
    for k in 0..=order {
        let g1 = decomp.apply_real_fn(|l| l.powi((k + order) as i32), &atom.b);
        let g2 = decomp.apply_real_fn(|l| l.powi(k as i32), &atom.b);
        let budget1 = r.powi(2 * order as i32 - 2 * k as i32) / mu_b.sqrt();
        let budget2 = r.powi(4 * order as i32 - 2 * k as i32) / mu_b.sqrt();
        g_margin = g_margin.min(1.0 - norm_mu(w, &g1) / budget1).min(1.0 - norm_mu(w, &g2) / budget2);

        // (r²L)^k b̃ reassembled from ψ(2^{-j}√L) pieces on either side of j₀.
        let direct = decomp.apply_real_fn(|l| (r * r * l).powi(k as i32), &b_tilde);
        let mut sum = CVector::zeros(space.n());
        let p = *partition;
        let mg1 = decomp.apply_function(m_sqrt, &g1)?;
        let mg2 = decomp.apply_function(m_sqrt, &g2)?;
        for j in lo..=hi {
            let piece = if (j as f64) >= j0 {
                decomp.apply_real_fn(|l| p.psi(2f64.powi(-j) * l.sqrt()), &mg1)
            } else {
                decomp.apply_real_fn(|l| p.psi(2f64.powi(-j) * l.sqrt()) * l.powi(order as i32), &mg2)
            };
            sum += piece * Complex64::new(r.powi(2 * k as i32), 0.0);
        }
        let denom = direct.norm().max(f64::MIN_POSITIVE);
        split_error = split_error.max((&sum - &direct).norm() / denom);

        let tail: f64 = (0..space.n())
            .filter(|&x| space.dist(x, y0) > 2.0 * r)
            .map(|x| direct[x].norm_sqr() * (space.dist(x, y0) / r).powf(beta) * space.weight(x))
            .sum();
        tail_ratio = tail_ratio.max(tail.sqrt() / scale);
    }
    let s_out = sq.apply(&a_tilde)?;
    let near_set = space.ball_members(y0, 2.0 * r);
    let (mut nearfield, mut farfield) = (0.0, 0.0);
    for x in 0..space.n() {
        if near_set.contains(&x) {
            nearfield += s_out[x] * space.weight(x);
        } else {
            farfield += s_out[x] * space.weight(x);
        }
    }
    Ok(Theorem2Row {
        atom_id: id,
        r,
        order,
        h1_in: sq.h1_norm(&atom.a)?,
        h1_out: nearfield + farfield,
        nearfield,
        farfield,
        best_epsilon: report.best_epsilon.unwrap_or(f64::INFINITY),
        multiple: report.multiple.unwrap_or(f64::NAN),
        molecule_passed: report.passed,
        g_margin,
        split_error,
        tail_ratio,
    })
}
