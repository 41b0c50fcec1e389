//! Library results against independently computed reference values.

use std::sync::Arc;

use nalgebra::DMatrix;

use hardylab::hardy::{make_atom, square_function, truncation_error_bound, validate_atom, BallSpec, ConeQuadrature};
use hardylab::models;
use hardylab::multiplier::{
    hormander_constant, make_partition, phi_kernel, sobolev_norm, theta_kernel, verify_prop1, LpExponent, Multiplier,
    SobolevGrid,
};
use hardylab::space::Space;
use hardylab::spectral::{check_davies_gaffney, check_gaussian_bounds, weighted_kernel_norm, Operator};
use hardylab::wave::{
    even_transform_with_mismatch, propagation_speed, random_function_on_ball, verify_lemma_dd1, EvenSpectralFunction,
};
use hardylab::{complexify, CVector, Complex64, RMatrix, RVector};

/// `exp(M)` by scaling and squaring of a truncated Taylor series.
fn expm(m: &RMatrix) -> RMatrix {
    let norm = m.abs().row_sum().max();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m / 2f64.powi(squarings);
    let n = m.nrows();
    let mut term = RMatrix::identity(n, n);
    let mut sum = RMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> RMatrix {
    let mut d = RMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        d[(i, i)] = 0.0;
    }
    for &(a, b, w) in edges {
        d[(a, b)] = d[(a, b)].min(w);
        d[(b, a)] = d[(b, a)].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

#[test]
fn graph_metric_matches_floyd_warshall() {
    let edges = [(0, 1, 1.5), (1, 2, 0.5), (2, 3, 2.0), (3, 0, 1.0), (1, 3, 3.5), (3, 4, 0.25), (4, 5, 1.0)];
    let space = Space::from_edges(6, &edges, vec![1.0; 6]).unwrap();
    let oracle = floyd_warshall(6, &edges);
    assert!((space.dist_matrix() - oracle).amax() < 1e-14);
}

#[test]
fn ball_volumes_by_enumeration() {
    let (space, _) = models::cycle_laplacian(8).unwrap();
    assert_eq!(space.volume(0, 2.0).unwrap(), 3.0);
    for x in 0..8 {
        for r in [0.5, 1.0, 1.5, 2.0, 3.7, 4.0, 4.01] {
            let count = (0..8usize).filter(|&y: &usize| {
                let k = (x as usize).abs_diff(y);
                (k.min(8 - k) as f64) < r
            });
            assert_eq!(space.volume(x, r).unwrap(), count.count() as f64);
        }
    }
}

#[test]
fn cycle_doubling_constant_by_dense_search() {
    let (space, _) = models::cycle_laplacian(8).unwrap();
    let profile = &space.doubling_profile(&[1.0]).unwrap()[0];
    let step = 1.0 / 256.0;
    let mut best = 0.0_f64;
    for x in 0..8 {
        for a in 1..=1280 {
            let t = a as f64 * step;
            let vt = space.volume(x, t).unwrap();
            for b in (a + 1)..=1280 {
                let st = b as f64 * step;
                best = best.max(space.volume(x, st).unwrap() / ((st / t) * vt));
            }
        }
    }
    // Dense sampling approaches the supremum from below.
    assert!(profile.c0 >= best - 1e-12);
    assert!(profile.c0 <= best * 1.01, "{} vs {best}", profile.c0);
    assert!((profile.c0 - 3.0).abs() < 1e-6, "c0 = {}, dense = {best}", profile.c0);
}

#[test]
fn full_semigroup_matches_matrix_exponential() {
    let (space, op) = models::cycle_laplacian(8).unwrap();
    let dec = op.decompose().unwrap();
    let action = op.action_matrix();
    for t in [0.05, 0.3, 2.0] {
        let oracle = expm(&(-t * &action));
        let kern = dec.semigroup_kernel(t, 0).unwrap();
        let w = DMatrix::from_diagonal(&RVector::from_vec(space.weights().to_vec()));
        assert!((kern * w - &oracle).amax() < 1e-12);
        assert!(oracle.min() > 0.0);
    }
}

#[test]
fn heat_action_on_weighted_operator_matches_expm() {
    let n = 24;
    let potential: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin().abs()).collect();
    let (space, op) = models::schrodinger_1d(n, &potential, None).unwrap();
    let dec = op.decompose().unwrap();
    let f = RVector::from_fn(n, |i, _| (i as f64 * 1.3).cos());
    let t = 0.004;
    let oracle = expm(&(-t * op.action_matrix())) * &f;
    let got = dec.apply_real(|l| (-t * l).exp(), &f);
    assert!((got - &oracle).amax() < 1e-10 * oracle.amax());
    let k = dec.heat_kernel(t).unwrap();
    let via_kernel = RVector::from_fn(n, |x, _| (0..n).map(|y| k[(x, y)] * f[y] * space.weight(y)).sum());
    assert!((via_kernel - oracle).amax() < 1e-10);
}

#[test]
fn weighted_kernel_norm_by_double_sum() {
    let (space, op) = models::cycle_laplacian(8).unwrap();
    let dec = op.decompose().unwrap();
    let t = 0.7;
    let k = dec.semigroup_kernel(t, 0).unwrap();
    let (beta, scale) = (2.0, t.sqrt());
    let w = |x: usize, y: usize| (1.0 + space.dist(x, y) / scale).powf(beta);
    let mut row = 0.0_f64;
    let mut col = 0.0_f64;
    for x in 0..8 {
        let mut r = 0.0;
        let mut c = 0.0;
        for y in 0..8 {
            r += k[(x, y)].abs() * w(x, y) * space.weight(y);
            c += k[(y, x)].abs() * w(y, x) * space.weight(y);
        }
        row = row.max(r);
        col = col.max(c);
    }
    let got = weighted_kernel_norm(&space, &k, beta, scale).unwrap();
    assert!((got - (row + col)).abs() < 1e-12 * got);
}

#[test]
fn phi_kernel_of_identity_matches_dense_functions() {
    let (space, op) = models::cycle_laplacian(16).unwrap();
    let dec = op.decompose().unwrap();
    let t: f64 = 1.3;
    let a = op.action_matrix();
    let oracle = (t * t) * &a * expm(&(-(t * t) * &a));
    let k = phi_kernel(&dec, &Multiplier::identity(), t, 1).unwrap();
    for x in 0..16 {
        for y in 0..16 {
            let want = oracle[(x, y)] / space.weight(y);
            assert!((k[(x, y)] - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
        let row: f64 = (0..16).map(|y| k[(x, y)].re * space.weight(y)).sum();
        assert!(row.abs() < 1e-12, "t²Le^(-t²L) annihilates constants");
    }
}

#[test]
fn square_function_of_eigenvectors_is_the_scalar_profile() {
    let (space, op) = models::cycle_laplacian(12).unwrap();
    let dec = op.decompose().unwrap();
    let quad = ConeQuadrature::for_spectrum(&space, &dec, 8).unwrap();
    for i in 0..dec.rank() {
        let lambda = dec.eigenvalues()[i];
        let u = complexify(&dec.eigenvectors().column(i).into_owned());
        let s = square_function(&space, &dec, &u, &quad).unwrap();
        for x in 0..12 {
            let mut want = 0.0;
            for (&t, &w) in quad.nodes().iter().zip(quad.weights()) {
                let q = t * t * lambda;
                let profile = q * q * (-2.0 * q).exp();
                let cone: f64 = (0..12)
                    .filter(|&y| space.dist(x, y) <= t)
                    .map(|y| u[y].norm_sqr() * space.weight(y))
                    .sum();
                want += w * profile * cone / space.volume(x, t).unwrap();
            }
            assert!((s[x] - want.sqrt()).abs() < 1e-8 * want.sqrt().max(1e-300));
        }
    }
}

#[test]
fn square_function_scales_with_operator_and_metric() {
    let (space, op) = models::cycle_laplacian(16).unwrap();
    let dec = op.decompose().unwrap();
    let quad = ConeQuadrature::for_spectrum(&space, &dec, 8).unwrap();
    let scaled_space = Arc::new(space.rescale_metric(4.0).unwrap());
    let scaled_op = op.scaled(4.0).on_space(scaled_space.clone()).unwrap();
    let scaled_dec = scaled_op.decompose().unwrap();
    let scaled_quad = quad.rescaled(0.5, &scaled_space.distinct_distances()).unwrap();
    let f = random_function_on_ball(&space, BallSpec { center: 3, radius: 4.5 }, 11);
    let a = square_function(&space, &dec, &f, &quad).unwrap();
    let b = square_function(&scaled_space, &scaled_dec, &f, &scaled_quad).unwrap();
    assert!((a - b).amax() < 1e-10);
}

#[test]
fn default_quadrature_truncation_is_negligible() {
    let builds = [
        models::cycle_laplacian(64).unwrap(),
        models::schrodinger_1d(64, &[1.0; 64], None).unwrap(),
        models::path_laplacian(20).unwrap(),
    ];
    for (space, op) in builds {
        let dec = op.decompose().unwrap();
        let quad = ConeQuadrature::for_spectrum(&space, &dec, 8).unwrap();
        assert!(truncation_error_bound(&space, &dec, &quad, 1.0) <= 1e-6);
    }
}

#[test]
fn cycle_atom_satisfies_support_conditions_by_direct_powers() {
    let (space, op) = models::cycle_laplacian(16).unwrap();
    let dec = op.decompose().unwrap();
    let ball = BallSpec { center: 5, radius: 4.5 };
    let atom = make_atom(&op, &dec, ball, 1, 3).unwrap();
    assert!(validate_atom(&space, &dec, &atom).passed);
    let inside = space.ball(5, 4.5).unwrap();
    let outside = |v: &CVector| (0..16).filter(|x| !inside.contains(x)).map(|x| v[x].norm()).fold(0.0, f64::max);
    let lb = op.apply_power(1, &atom.b);
    assert!(outside(&atom.b) < 1e-12 && outside(&lb) < 1e-12);
    assert!((&lb - &atom.a).camax() < 1e-12);
    // max_k ‖(r²L)^k b‖ μ(B)^{1/2} / r^{2M} = 1.
    let r2 = 4.5f64 * 4.5;
    let vol = space.volume(5, 4.5).unwrap();
    let size = (0..=1)
        .map(|k| dec.norm(&op.apply_power(k, &atom.b)) * r2.powi(k as i32))
        .fold(0.0, f64::max)
        * vol.sqrt()
        / r2;
    assert!((size - 1.0).abs() < 1e-10);
}

#[test]
fn point_ball_atom_is_infeasible() {
    let (_, op) = models::cycle_laplacian(16).unwrap();
    let dec = op.decompose().unwrap();
    let r = make_atom(&op, &dec, BallSpec { center: 0, radius: 0.5 }, 1, 0);
    assert!(matches!(r, Err(hardylab::Error::AtomInfeasible(_))));
}

#[test]
fn theta_refinement_changes_little() {
    let (space, op) = models::cycle_laplacian(16).unwrap();
    let dec = op.decompose().unwrap();
    let m = Multiplier::identity();
    let coarse = theta_kernel(&space, &dec, &m, 0, 1, 16).unwrap();
    let fine = theta_kernel(&space, &dec, &m, 0, 1, 64).unwrap();
    // The coarse times are a subset of the fine ones.
    assert!(coarse.iter().zip(fine.iter()).all(|(c, f)| c <= f));
    assert!(fine.max() <= 1.05 * coarse.max());
    let (c, f) = (weighted_kernel_norm(&space, &coarse, 0.49, 1.0).unwrap(), weighted_kernel_norm(&space, &fine, 0.49, 1.0).unwrap());
    assert!(f >= c && f <= 1.05 * c, "coarse {c}, fine {f}");
}

#[test]
fn prop1_constant_is_stable_under_doubling() {
    let sup = |n: usize| {
        let (space, op) = models::cycle_laplacian(n).unwrap();
        let dec = op.decompose().unwrap();
        let t_grid = hardylab::multiplier::log_grid(0.25 / dec.lambda_max().sqrt(), 4.0 / dec.lambda_min().sqrt(), 4);
        verify_prop1(&space, &dec, &Multiplier::identity(), 0.49, &t_grid, 1).unwrap().sup
    };
    let (a, b) = (sup(16), sup(32));
    assert!(a.is_finite() && (b / a - 1.0).abs() <= 0.2, "{a} vs {b}");
}

#[test]
fn imaginary_power_hormander_norm_is_dilation_invariant() {
    let p = make_partition(1.0).unwrap();
    let grid = SobolevGrid::hormander(1.0, LpExponent::Infinity);
    let t_grid: Vec<f64> = (0..=20).map(|k| 10f64.powf(-2.0 + k as f64 / 4.0)).collect();
    let rep = hormander_constant(&Multiplier::imaginary_power(1.0), |x| p.eta(x), &grid, &t_grid).unwrap();
    let at_one = rep.per_t.iter().find(|(t, _)| (*t - 1.0).abs() < 1e-12).unwrap().1;
    assert!((rep.value / at_one - 1.0).abs() < 1e-3);
}

#[test]
fn oscillatory_hormander_norm_grows_linearly() {
    let p = make_partition(1.0).unwrap();
    let grid = SobolevGrid::hormander(1.0, LpExponent::Infinity);
    let t_grid: Vec<f64> = (0..=16).map(|k| 16.0 * 2f64.powf(k as f64 / 4.0)).collect();
    let rep = hormander_constant(&Multiplier::oscillatory(1.0), |x| p.eta(x), &grid, &t_grid).unwrap();
    let pts: Vec<(f64, f64)> = rep.per_t.iter().map(|(t, v)| (t.ln(), v.ln())).collect();
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn gaussian_sobolev_norms_in_closed_form() {
    let g0 = SobolevGrid::new(16.0, 8192, 0.0, LpExponent::Two).unwrap();
    let v0 = sobolev_norm(|x| Complex64::new((-x * x).exp(), 0.0), &g0).unwrap();
    assert!((v0 - (std::f64::consts::PI / 2.0).powf(0.25)).abs() < 1e-6);

    // (I - d²/dx²) e^{-x²} = (3 - 4x²) e^{-x²}; its L² norm by fine midpoint sums.
    let g2 = SobolevGrid::new(16.0, 8192, 2.0, LpExponent::Two).unwrap();
    let v2 = sobolev_norm(|x| Complex64::new((-x * x).exp(), 0.0), &g2).unwrap();
    let h = 1e-4;
    let oracle = ((0..200_000)
        .map(|i| {
            let x = -10.0 + (i as f64 + 0.5) * h;
            ((3.0 - 4.0 * x * x) * (-x * x).exp()).powi(2)
        })
        .sum::<f64>()
        * h)
        .sqrt();
    assert!((v2 - oracle).abs() < 1e-6 * oracle);
}

#[test]
fn gaussian_even_transform_on_small_cycle() {
    let (space, op) = models::cycle_laplacian(16).unwrap();
    let dec = op.decompose().unwrap();
    let g = random_function_on_ball(&space, BallSpec { center: 2, radius: 3.5 }, 5);
    for j in -2..=3 {
        let (out, mismatch) = even_transform_with_mismatch(&dec, &EvenSpectralFunction::gaussian(1.0), j, &g).unwrap();
        let s = 2f64.powi(-j);
        let oracle = dec.apply_real_fn(|l| (-s * s * l).exp(), &g);
        assert!(mismatch < 1e-6);
        assert!(dec.norm(&(out - &oracle)) <= 1e-6 * dec.norm(&oracle));
    }
}

#[test]
fn continuum_wave_front_moves_at_unit_speed() {
    // d'Alembert: on the line the support of cos(s√L)g grows by exactly s.
    let n = 127;
    let (space, op) = models::schrodinger_1d(n, &vec![0.0; n], None).unwrap();
    let dec = op.decompose().unwrap();
    let ball = BallSpec { center: 63, radius: 3.5 / 128.0 };
    let g = random_function_on_ball(&space, ball, 1);
    let s_grid: Vec<f64> = (0..=8).map(|k| k as f64 * 0.04).collect();
    let rep = propagation_speed(&space, &dec, &g, ball, &s_grid, 1e-6).unwrap();
    assert_eq!(rep.rows[0].radius, 0.0);
    assert!((rep.front_speed - 1.0).abs() <= 0.2, "front speed {}", rep.front_speed);
    for row in &rep.rows[1..] {
        assert!(row.radius >= row.s, "the front cannot lag the continuum: {row:?}");
    }
}

#[test]
fn band_limited_output_stays_in_the_propagated_ball() {
    let (space, op) = models::cycle_laplacian(64).unwrap();
    let dec = op.decompose().unwrap();
    let cutoff = 4.0;
    let f = EvenSpectralFunction::band_limited_bump(cutoff);
    let ball = BallSpec { center: 10, radius: 2.5 };
    let g = random_function_on_ball(&space, ball, 9);
    let eps = 1e-8;
    for j in 0..=2 {
        let reach = 2f64.powi(-j) * cutoff;
        let s_grid: Vec<f64> = (0..=64).map(|k| k as f64 * reach / 64.0).collect();
        let speed = propagation_speed(&space, &dec, &g, ball, &s_grid, eps).unwrap();
        let radius = ball.radius + speed.rows.iter().map(|r| r.radius).fold(0.0, f64::max);
        let (out, _) = even_transform_with_mismatch(&dec, &f, j, &g).unwrap();
        let outside: f64 = (0..64)
            .filter(|&x| space.dist(10, x) >= radius)
            .map(|x| out[x].norm_sqr())
            .sum::<f64>()
            .sqrt();
        // F̂ >= 0, so the synthesis weights sum to F(0).
        assert!(outside <= eps * f.eval(0.0) * dec.norm(&g) * 1.01, "j = {j}: {outside:e}");
    }
}

#[test]
fn weighted_tail_vanishes_when_the_far_region_is_empty() {
    let (space, op) = models::cycle_laplacian(16).unwrap();
    let dec = op.decompose().unwrap();
    let ball = BallSpec { center: 0, radius: 4.5 };
    let g = random_function_on_ball(&space, ball, 2);
    let rep = verify_lemma_dd1(&space, &dec, &EvenSpectralFunction::gaussian(1.0), &[(g, ball)], (-1, 2), 1.0, 0.6).unwrap();
    assert!(rep.rows.iter().all(|r| r.lhs == 0.0 && r.ratio == 0.0));
}

#[test]
fn weighted_tail_budget_halves_per_octave() {
    let (space, op) = models::cycle_laplacian(32).unwrap();
    let dec = op.decompose().unwrap();
    let ball = BallSpec { center: 0, radius: 2.5 };
    let g = random_function_on_ball(&space, ball, 4);
    let beta = 1.5;
    let rep = verify_lemma_dd1(&space, &dec, &EvenSpectralFunction::gaussian(1.0), &[(g, ball)], (-2, 3), beta, 0.6).unwrap();
    for w in rep.rows.windows(2) {
        assert!((w[1].budget / w[0].budget - 2f64.powf(-beta)).abs() < 1e-12);
    }
}

#[test]
fn schrodinger_heat_kernel_bounds_fit() {
    let n = 64;
    let (space, op) = models::schrodinger_1d(n, &vec![1.0; n], None).unwrap();
    let dec = op.decompose().unwrap();
    let t_grid: Vec<f64> = (0..=16).map(|k| 1e-3 * 2f64.powf(k as f64 / 4.0)).collect();
    let k0 = check_gaussian_bounds(&space, &dec, &t_grid, 0).unwrap();
    let k1 = check_gaussian_bounds(&space, &dec, &t_grid, 1).unwrap();
    assert!(k0.margin >= -1e-12 && k1.margin >= -1e-12);
    assert!(k1.c_scale >= k0.c_scale, "c1 = {}, c0 = {}", k1.c_scale, k0.c_scale);

    // Davies-Gaffney follows from the Gaussian bound: a fit must exist.
    let ball = |c: usize| space.ball(c, 0.05).unwrap();
    let pairs = vec![(ball(8), ball(24)), (ball(8), ball(40)), (ball(20), ball(56))];
    let dg = check_davies_gaffney(&space, &dec, &pairs, &t_grid).unwrap();
    assert!(dg.c_const.is_finite() && dg.c_const > 0.0);
}

#[test]
fn single_operator_on_two_points() {
    // L = [[1, -1], [-1, 1]] + I on unit weights: eigenvalues 1 and 3.
    let space = Arc::new(Space::new(RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), vec![1.0, 1.0]).unwrap());
    let op = Operator::new(space, RMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]), None).unwrap();
    let dec = op.decompose().unwrap();
    assert!((dec.eigenvalues()[0] - 1.0).abs() < 1e-14 && (dec.eigenvalues()[1] - 3.0).abs() < 1e-14);
    let t = 0.4;
    let k = dec.heat_kernel(t).unwrap();
    let (a, b) = ((-t).exp(), (-3.0 * t).exp());
    assert!((k[(0, 0)] - (a + b) / 2.0).abs() < 1e-14);
    assert!((k[(0, 1)] - (a - b) / 2.0).abs() < 1e-14);
}
