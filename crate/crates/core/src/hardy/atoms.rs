//! `(1,2,M)`-atoms and `(1,2,M,ε)`-molecules: construction and validation.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Space;
use crate::spectral::{norm_mu, norm_mu_on, Operator, SpectralDecomposition};
use crate::{CVector, Complex64, RMatrix};

/// Entries at or below this fraction of the largest entry count as zero in
/// support checks.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Relative tolerance for `a = L^M b`.
const IDENTITY_TOL: f64 = 1e-9;
/// Singular values below this fraction of the largest span the nullspace.
const NULLSPACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub a: CVector,
    pub b: CVector,
    pub ball: BallSpec,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub a_tilde: CVector,
    pub b_tilde: CVector,
    pub ball: BallSpec,
    pub order: usize,
    pub epsilon: f64,
}

/// One checked condition: `margin = 1 - observed / allowed`, so a margin of
/// `-1` means the allowance was exceeded twofold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionMargin {
    pub condition: String,
    pub margin: f64,
    pub witness: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub margins: Vec<ConditionMargin>,
    /// Molecules only: the largest `ε` for which the annulus budgets hold.
    pub best_epsilon: Option<f64>,
    /// Molecules only: `max_{j,k} ‖(r²L)^k b̃‖_{U_j} / budget_j` at the molecule's `ε`.
    pub multiple: Option<f64>,
}

/// Slack tolerated before a margin counts as a failure.
pub const MARGIN_TOL: f64 = 1e-9;

impl ValidationReport {
    fn from_margins(margins: Vec<ConditionMargin>) -> Self {
        let passed = margins.iter().all(|m| m.margin >= -MARGIN_TOL);
        ValidationReport { passed, margins, best_epsilon: None, multiple: None }
    }

    pub fn worst(&self) -> Option<&ConditionMargin> {
        self.margins
            .iter()
            .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap_or(std::cmp::Ordering::Equal))
    }
}

fn zero_small(v: &mut CVector) {
    let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for c in v.iter_mut() {
        if c.norm() <= SUPPORT_TOL * peak {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// `(r²L)^k b` for `k = 0..=order`, through the functional calculus.
/// `k = 0` returns `b` itself, which may have a component in a deflated kernel.
fn scaled_powers(decomp: &SpectralDecomposition, b: &CVector, r: f64, order: usize) -> Vec<CVector> {
    let mut out = vec![b.clone()];
    for k in 1..=order {
        out.push(decomp.apply_real_fn(|l| (r * r * l).powi(k as i32), b));
    }
    out
}

fn relative_error(got: &CVector, want: &CVector) -> f64 {
    let scale = want.norm().max(got.norm());
    if scale == 0.0 {
        0.0
    } else {
        (got - want).norm() / scale
    }
}

/// Partition of the space into `U_0 = B(y₀, r)` and the dyadic annuli
/// `U_j = B(y₀, 2^j r) \ B(y₀, 2^{j-1} r)` until every point is covered.
pub fn annuli(space: &Space, center: usize, radius: f64) -> Vec<Vec<usize>> {
    let reach = (0..space.n()).map(|y| space.dist(center, y)).fold(0.0, f64::max);
    let mut out = vec![space.ball_members(center, radius)];
    let mut j = 1;
    loop {
        let (inner, outer) = (radius * 2f64.powi(j - 1), radius * 2f64.powi(j));
        out.push((0..space.n()).filter(|&y| {
            let d = space.dist(center, y);
            d >= inner && d < outer
        }).collect());
        if outer > reach {
            break;
        }
        j += 1;
    }
    out
}

/// Builds a random `(1,2,M)`-atom on the ball `B(center, radius)`.
///
/// `b` is drawn from the nullspace of the maps `b ↦ (L^k b)|_{Ω∖B}`,
/// `k = 1..=M`, on functions supported in `B`, then scaled so that the
/// worst of the size conditions holds with equality.
pub fn make_atom(op: &Operator, decomp: &SpectralDecomposition, ball: BallSpec, order: usize, seed: u64) -> Result<Atom> {
    let space = op.space();
    if order == 0 {
        return Err(Error::InvalidArgument("atom order must be at least 1".into()));
    }
    if ball.center >= space.n() {
        return Err(Error::DimensionMismatch(format!("ball center {} is not a point", ball.center)));
    }
    if !(ball.radius > 0.0) {
        return Err(Error::InvalidArgument(format!("ball radius must be positive, got {}", ball.radius)));
    }
    let inside = space.ball_members(ball.center, ball.radius);
    let outside: Vec<usize> = (0..space.n()).filter(|x| !inside.contains(x)).collect();
    let a = op.action_matrix();
    let mut power = a.clone();
    let rows = (order * outside.len()).max(inside.len());
    let mut constraints = RMatrix::zeros(rows, inside.len());
    for k in 0..order {
        if k > 0 {
            power = &a * &power;
        }
        for (i, &x) in outside.iter().enumerate() {
            for (j, &y) in inside.iter().enumerate() {
                constraints[(k * outside.len() + i, j)] = power[(x, y)];
            }
        }
    }
    let svd = constraints.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let sigma_max = svd.singular_values.max();
    let basis: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= NULLSPACE_TOL * sigma_max)
        .collect();
    if basis.is_empty() {
        return Err(Error::AtomInfeasible(format!(
            "no function on B({}, {}) keeps L^k b inside the ball for k <= {order}",
            ball.center, ball.radius
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut local = DVector::<f64>::zeros(inside.len());
    for &i in &basis {
        let g: f64 = StandardNormal.sample(&mut rng);
        local += v_t.row(i).transpose() * g;
    }
    let mut b = CVector::zeros(space.n());
    for (j, &y) in inside.iter().enumerate() {
        b[y] = Complex64::new(local[j], 0.0);
    }
    let mu_b: f64 = inside.iter().map(|&y| space.weight(y)).sum();
    let budget = ball.radius.powi(2 * order as i32) / mu_b.sqrt();
    let worst = scaled_powers(decomp, &b, ball.radius, order)
        .iter()
        .map(|v| norm_mu(space.weights(), v))
        .fold(0.0, f64::max);
    if worst == 0.0 {
        return Err(Error::AtomInfeasible("nullspace direction vanished".into()));
    }
    b *= Complex64::new(budget / worst, 0.0);
    let mut abig = b.clone();
    for _ in 0..order {
        abig = crate::spectral::real_times_complex(&a, &abig);
    }
    Ok(Atom { a: abig, b, ball, order })
}

/// Checks `a = L^M b`, the support of `L^k b` and the size conditions.
pub fn validate_atom(space: &Space, decomp: &SpectralDecomposition, atom: &Atom) -> ValidationReport {
    let r = atom.ball.radius;
    let m = atom.order;
    let inside = space.ball_members(atom.ball.center, r);
    let mu_b: f64 = inside.iter().map(|&y| space.weight(y)).sum();
    let mut margins = Vec::new();

    let lmb = decomp.apply_real_fn(|l| l.powi(m as i32), &atom.b);
    margins.push(ConditionMargin {
        condition: "a=L^M b".into(),
        margin: 1.0 - relative_error(&atom.a, &lmb) / IDENTITY_TOL,
        witness: m,
    });

    let powers = scaled_powers(decomp, &atom.b, r, m);
    let (mut supp_margin, mut supp_witness) = (f64::INFINITY, 0);
    for v in &powers {
        let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            continue;
        }
        for (x, c) in v.iter().enumerate() {
            if !inside.contains(&x) {
                let mg = 1.0 - c.norm() / (SUPPORT_TOL * peak);
                if mg < supp_margin {
                    supp_margin = mg;
                    supp_witness = x;
                }
            }
        }
    }
    margins.push(ConditionMargin {
        condition: "supp L^k b in B".into(),
        margin: if supp_margin.is_finite() { supp_margin.min(1.0) } else { 1.0 },
        witness: supp_witness,
    });

    let budget = r.powi(2 * m as i32) / mu_b.sqrt();
    let (mut size_margin, mut size_witness) = (f64::INFINITY, 0);
    for (k, v) in powers.iter().enumerate() {
        let mg = 1.0 - norm_mu(space.weights(), v) / budget;
        if mg < size_margin {
            size_margin = mg;
            size_witness = k;
        }
    }
    margins.push(ConditionMargin { condition: "size (r^2 L)^k b".into(), margin: size_margin, witness: size_witness });
    ValidationReport::from_margins(margins)
}

/// Checks `ã = L^M b̃` and the annulus budgets
/// `‖(r²L)^k b̃‖_{L²(U_j)} <= r^{2M} 2^{-jε} V(y₀, 2^j r)^{-1/2}`.
pub fn validate_molecule(space: &Space, decomp: &SpectralDecomposition, mol: &Molecule) -> ValidationReport {
    let r = mol.ball.radius;
    let m = mol.order;
    let y0 = mol.ball.center;
    let mut margins = Vec::new();

    let lmb = decomp.apply_real_fn(|l| l.powi(m as i32), &mol.b_tilde);
    margins.push(ConditionMargin {
        condition: "a=L^M b".into(),
        margin: 1.0 - relative_error(&mol.a_tilde, &lmb) / IDENTITY_TOL,
        witness: m,
    });

    let mut powers = scaled_powers(decomp, &mol.b_tilde, r, m);
    powers.iter_mut().for_each(zero_small);
    let rings = annuli(space, y0, r);
    let scale = r.powi(2 * m as i32);
    let mut best_eps = f64::INFINITY;
    let mut multiple = 0.0_f64;
    let (mut worst, mut worst_j) = (f64::INFINITY, 0);
    for (j, ring) in rings.iter().enumerate() {
        let vol = space.volume_of(y0, r * 2f64.powi(j as i32));
        let base = scale / vol.sqrt();
        let budget = base * 2f64.powf(-(j as f64) * mol.epsilon);
        for v in &powers {
            let nrm = norm_mu_on(space.weights(), v, ring);
            multiple = multiple.max(nrm / budget);
            let mg = 1.0 - nrm / budget;
            if mg < worst {
                worst = mg;
                worst_j = j;
            }
            if j >= 1 && nrm > 0.0 {
                best_eps = best_eps.min((base / nrm).log2() / j as f64);
            }
        }
    }
    margins.push(ConditionMargin { condition: "annulus budgets".into(), margin: worst, witness: worst_j });
    let mut report = ValidationReport::from_margins(margins);
    report.best_epsilon = Some(best_eps);
    report.multiple = Some(multiple);
    report
}

impl Atom {
    /// Every atom is a molecule for any `ε`.
    pub fn as_molecule(&self, epsilon: f64) -> Molecule {
        Molecule { a_tilde: self.a.clone(), b_tilde: self.b.clone(), ball: self.ball, order: self.order, epsilon }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn cycle_atom_is_valid() {
        let (space, op) = models::cycle_laplacian(16).unwrap();
        let dec = op.decompose().unwrap();
        let atom = make_atom(&op, &dec, BallSpec { center: 0, radius: 4.5 }, 1, 7).unwrap();
        let rep = validate_atom(&space, &dec, &atom);
        assert!(rep.passed, "{rep:?}");
        // Normalisation saturates the size condition.
        let size = rep.margins.iter().find(|m| m.condition.starts_with("size")).unwrap();
        assert!(size.margin.abs() < 1e-9);
    }

    #[test]
    fn point_ball_is_infeasible() {
        let (_, op) = models::cycle_laplacian(16).unwrap();
        let dec = op.decompose().unwrap();
        let r = make_atom(&op, &dec, BallSpec { center: 3, radius: 0.5 }, 1, 0);
        assert!(matches!(r, Err(Error::AtomInfeasible(_))));
    }

    #[test]
    fn doubled_atom_fails_size_by_one() {
        let (space, op) = models::cycle_laplacian(16).unwrap();
        let dec = op.decompose().unwrap();
        let mut atom = make_atom(&op, &dec, BallSpec { center: 5, radius: 3.5 }, 1, 1).unwrap();
        atom.a *= Complex64::new(2.0, 0.0);
        atom.b *= Complex64::new(2.0, 0.0);
        let rep = validate_atom(&space, &dec, &atom);
        assert!(!rep.passed);
        let size = rep.margins.iter().find(|m| m.condition.starts_with("size")).unwrap();
        assert!((size.margin + 1.0).abs() < 1e-9);
    }

    #[test]
    fn annuli_partition_the_space() {
        let (space, _) = models::cycle_laplacian(64).unwrap();
        for r in [0.5, 2.5, 4.5, 40.0] {
            let rings = annuli(&space, 9, r);
            let mut seen = vec![0; 64];
            for ring in &rings {
                for &y in ring {
                    seen[y] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "r = {r}");
        }
    }

    #[test]
    fn atoms_are_molecules() {
        let (space, op) = models::cycle_laplacian(32).unwrap();
        let dec = op.decompose().unwrap();
        let atom = make_atom(&op, &dec, BallSpec { center: 4, radius: 2.5 }, 2, 3).unwrap();
        let rep = validate_molecule(&space, &dec, &atom.as_molecule(5.0));
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.best_epsilon, Some(f64::INFINITY));
    }
}
