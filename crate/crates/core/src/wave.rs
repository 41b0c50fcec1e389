//! Cosine propagators `cos(s√L)`, measured propagation speed, and even
//! spectral functions `F(2^{-j}√L)` synthesised from cosine waves.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hardy::BallSpec;
use crate::multiplier::{sobolev_norm, LpExponent, SobolevGrid};
use crate::space::Space;
use crate::spectral::{norm_mu, SpectralDecomposition};
use crate::{CVector, Complex64};

/// Largest tolerated mismatch between the cosine synthesis and direct calculus.
pub const SYNTHESIS_TOL: f64 = 1e-6;

type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum EvenKind {
    /// `F` given pointwise, negligible outside `[-half_width, half_width]`.
    Sampled { f: Arc<RealFn>, half_width: f64 },
    /// `F(x) = Σ amp · cos(a x)`, i.e. `F̂` a sum of delta pairs at `±a`.
    DeltaPairs(Vec<(f64, f64)>),
    /// `F̂` given pointwise and supported in `[-cutoff, cutoff]`.
    BandLimited { fhat: Arc<RealFn>, cutoff: f64 },
}

/// A real even function on `ℝ`, usable as `F(2^{-j}√L)`.
#[derive(Clone)]
pub struct EvenSpectralFunction {
    name: String,
    kind: EvenKind,
}

impl fmt::Debug for EvenSpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EvenSpectralFunction({})", self.name)
    }
}

/// Composite Simpson rule on `[0, b]` with `2k` panels.
fn simpson<F: Fn(f64) -> f64>(f: F, b: f64, k: usize) -> f64 {
    let n = 2 * k;
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

impl EvenSpectralFunction {
    pub fn sampled<F>(name: impl Into<String>, f: F, half_width: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("support half width must be positive, got {half_width}")));
        }
        Ok(EvenSpectralFunction { name: name.into(), kind: EvenKind::Sampled { f: Arc::new(f), half_width } })
    }

    /// `F(x) = e^{-(x/scale)²}`.
    pub fn gaussian(scale: f64) -> Self {
        EvenSpectralFunction {
            name: format!("gaussian({scale})"),
            kind: EvenKind::Sampled { f: Arc::new(move |x: f64| (-(x / scale).powi(2)).exp()), half_width: 8.0 * scale },
        }
    }

    /// `F(x) = Σ amp cos(a x)`.
    pub fn cosines(terms: Vec<(f64, f64)>) -> Self {
        EvenSpectralFunction { name: format!("cosines({} terms)", terms.len()), kind: EvenKind::DeltaPairs(terms) }
    }

    /// `F̂(ξ) = exp(1 - 1/(1 - (ξ/T)²))` on `(-T, T)`.
    pub fn band_limited_bump(cutoff: f64) -> Self {
        let fhat = move |xi: f64| {
            let s = xi / cutoff;
            if s.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - s * s)).exp()
            }
        };
        EvenSpectralFunction { name: format!("bump_spectrum({cutoff})"), kind: EvenKind::BandLimited { fhat: Arc::new(fhat), cutoff } }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &EvenKind {
        &self.kind
    }

    /// `supp F̂ ⊂ [-T, T]` when known.
    pub fn spectral_cutoff(&self) -> Option<f64> {
        match &self.kind {
            EvenKind::BandLimited { cutoff, .. } => Some(*cutoff),
            EvenKind::DeltaPairs(t) => Some(t.iter().map(|p| p.1.abs()).fold(0.0, f64::max)),
            EvenKind::Sampled { .. } => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            EvenKind::Sampled { f, .. } => f(x),
            EvenKind::DeltaPairs(terms) => terms.iter().map(|(amp, a)| amp * (a * x).cos()).sum(),
            EvenKind::BandLimited { fhat, cutoff } => {
                // About 80 nodes per radian of the oscillation keeps Simpson near 1e-10.
                let panels = 4000.max((40.0 * cutoff * x.abs()).ceil() as usize);
                simpson(|xi| fhat(xi) * (xi * x).cos(), *cutoff, panels) / std::f64::consts::PI
            }
        }
    }

    /// `‖F‖_{W^{2,s}}`, through the Bessel potential for sampled functions and
    /// through Plancherel, `(2π)^{-1} ∫ (1+ξ²)^s |F̂|² dξ`, for band-limited ones.
    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        match &self.kind {
            EvenKind::Sampled { f, half_width } => {
                let grid = SobolevGrid::new(2.0 * half_width, 16384, s, LpExponent::Two)?;
                sobolev_norm(|x| Complex64::new(f(x), 0.0), &grid)
            }
            EvenKind::BandLimited { fhat, cutoff } => {
                let v = simpson(|xi| (1.0 + xi * xi).powf(s) * fhat(xi).powi(2), *cutoff, 4000);
                Ok((v / std::f64::consts::PI).sqrt())
            }
            EvenKind::DeltaPairs(_) => Err(Error::InvalidArgument("a finite cosine sum is not in L²".into())),
        }
    }

    /// Plancherel-side norm of a sampled function from its FFT transform.
    pub fn plancherel_norm(&self, s: f64) -> Result<f64> {
        match &self.kind {
            EvenKind::Sampled { half_width, .. } => {
                let spec = self.sampled_transform(2.0 * half_width, 16384)?;
                let v: f64 = spec
                    .xi
                    .iter()
                    .zip(&spec.values)
                    .map(|(xi, v)| (1.0 + xi * xi).powf(s) * v * v)
                    .sum::<f64>();
                Ok((v * spec.dxi / (2.0 * std::f64::consts::PI)).sqrt())
            }
            _ => self.sobolev_norm(s),
        }
    }

    /// `F̂` on the full symmetric FFT frequency grid of `[-R, R)` with `n` nodes.
    fn sampled_transform(&self, half_width: f64, n: usize) -> Result<FourierSamples> {
        let f = match &self.kind {
            EvenKind::Sampled { f, .. } => f,
            _ => return Err(Error::InvalidArgument("only sampled functions are transformed by FFT".into())),
        };
        let h = 2.0 * half_width / n as f64;
        let mut buf: Vec<Complex64> = (0..n).map(|m| Complex64::new(f(-half_width + m as f64 * h), 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let dxi = std::f64::consts::PI / half_width;
        let (mut xi, mut values) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (k, v) in buf.iter().enumerate() {
            let kk = if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
            let sign = if kk.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            xi.push(kk as f64 * dxi);
            values.push(sign * h * v.re);
        }
        Ok(FourierSamples { xi, values, dxi })
    }
}

struct FourierSamples {
    xi: Vec<f64>,
    values: Vec<f64>,
    dxi: f64,
}

/// `cos(s√L) g`.
pub fn cosine_propagator(decomp: &SpectralDecomposition, s: f64, g: &CVector) -> Result<CVector> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("propagation time must be >= 0, got {s}")));
    }
    Ok(decomp.apply_real_fn(|l| (s * l.sqrt()).cos(), g))
}

/// Spectral weights `w_i = (2π)^{-1} Σ_k Δξ F̂(ξ_k) cos(2^{-j} ξ_k √λ_i)`.
/// Also returns `(2π)^{-1} Σ_k Δξ |F̂(ξ_k)|`, the bound on `sup |F|` implied by the quadrature.
fn synthesis_weights(decomp: &SpectralDecomposition, f: &EvenSpectralFunction, scale: f64) -> Result<(Vec<f64>, f64)> {
    let roots: Vec<f64> = decomp.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let s_max = scale * roots.last().copied().unwrap_or(0.0);
    let two_pi = 2.0 * std::f64::consts::PI;
    let (xi, vals, dxi): (Vec<f64>, Vec<f64>, f64) = match &f.kind {
        EvenKind::DeltaPairs(terms) => {
            let weights = roots
                .iter()
                .map(|r| terms.iter().map(|(amp, a)| amp * (scale * a * r).cos()).sum())
                .collect();
            return Ok((weights, terms.iter().map(|t| t.0.abs()).sum()));
        }
        EvenKind::Sampled { half_width, .. } => {
            // Spacing π/R' <= π/(4 s_max); the periodised image at 2R' stays outside the support.
            let r_prime = half_width.max(4.0 * s_max);
            let h = half_width / 8192.0;
            let n = ((2.0 * r_prime / h).ceil() as usize).next_power_of_two().max(4096);
            let spec = f.sampled_transform(r_prime, n)?;
            let peak = spec.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let keep: Vec<usize> = (0..n).filter(|&k| spec.values[k].abs() > 1e-22 * peak).collect();
            (
                keep.iter().map(|&k| spec.xi[k]).collect(),
                keep.iter().map(|&k| spec.values[k]).collect(),
                spec.dxi,
            )
        }
        EvenKind::BandLimited { fhat, cutoff } => {
            let dxi = (cutoff / 4096.0).min(std::f64::consts::PI / (64.0 * s_max.max(f64::MIN_POSITIVE)));
            let k_max = (cutoff / dxi).ceil() as i64;
            let xi: Vec<f64> = (-k_max..=k_max).map(|k| k as f64 * dxi).collect();
            let vals = xi.iter().map(|&x| fhat(x)).collect();
            (xi, vals, dxi)
        }
    };
    let weights = roots
        .par_iter()
        .map(|r| {
            let mut acc = 0.0;
            for (x, v) in xi.iter().zip(&vals) {
                acc += v * (scale * x * r).cos();
            }
            acc * dxi / two_pi
        })
        .collect();
    let sup_bound = vals.iter().map(|v| v.abs()).sum::<f64>() * dxi / two_pi;
    Ok((weights, sup_bound))
}

/// `F(2^{-j}√L) g` through `(2π)^{-1} ∫ F̂(ξ) cos(2^{-j} ξ √L) g dξ`, with the
/// relative mismatch against the direct calculus `F(2^{-j}√λ)`.
///
/// The mismatch is relative to `‖F(2^{-j}√L) g‖`, floored at `1e-9 · sup|F| · ‖g‖`
/// so that outputs which underflow do not turn round-off into large ratios.
pub fn even_transform_with_mismatch(
    decomp: &SpectralDecomposition,
    f: &EvenSpectralFunction,
    j: i32,
    g: &CVector,
) -> Result<(CVector, f64)> {
    let scale = 2f64.powi(-j);
    let (weights, sup_bound) = synthesis_weights(decomp, f, scale)?;
    let mut c = decomp.coefficients(g);
    for (ci, w) in c.iter_mut().zip(&weights) {
        *ci *= *w;
    }
    let out = decomp.synthesize(&c);
    let oracle = decomp.apply_real_fn(|l| f.eval(scale * l.sqrt()), g);
    let denom = decomp.norm(&oracle).max(1e-9 * sup_bound * decomp.norm(g)).max(f64::MIN_POSITIVE);
    let mismatch = decomp.norm(&(&out - &oracle)) / denom;
    Ok((out, mismatch))
}

/// [`even_transform_with_mismatch`] that fails when the mismatch exceeds [`SYNTHESIS_TOL`].
pub fn even_transform_apply(decomp: &SpectralDecomposition, f: &EvenSpectralFunction, j: i32, g: &CVector) -> Result<CVector> {
    let (out, mismatch) = even_transform_with_mismatch(decomp, f, j, g)?;
    if !(mismatch <= SYNTHESIS_TOL) {
        return Err(Error::QuadratureTooCoarse(format!(
            "cosine synthesis of {} at j = {j} differs from the calculus by {mismatch:.3e}",
            f.name
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRow {
    pub s: f64,
    /// Infimum of the `ρ` with `‖cos(s√L) g‖` outside `B(y₀, r + ρ)` at most `eps ‖g‖`.
    pub radius: f64,
    /// Relative `L²` mass strictly beyond distance `r + ρ`.
    pub mass_outside: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedReport {
    /// `max ρ/s` over the grid.
    pub sigma: f64,
    /// Least-squares slope of `ρ` against `s` over the rows with `s > 0`.
    /// Discrete propagators carry a leading tail that adds a slowly growing
    /// offset to `ρ`; the slope discounts it.
    pub front_speed: f64,
    pub eps: f64,
    pub rows: Vec<SpeedRow>,
}

/// Measures how fast `cos(s√L) g` leaves the ball carrying `g`.
pub fn propagation_speed(
    space: &Space,
    decomp: &SpectralDecomposition,
    g: &CVector,
    ball: BallSpec,
    s_grid: &[f64],
    eps: f64,
) -> Result<SpeedReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 0.5), got {eps}")));
    }
    let gnorm = decomp.norm(g);
    if gnorm == 0.0 {
        return Err(Error::InvalidArgument("source function is zero".into()));
    }
    let y0 = ball.center;
    let mut order: Vec<usize> = (0..space.n()).collect();
    order.sort_by(|&a, &b| space.dist(y0, b).partial_cmp(&space.dist(y0, a)).unwrap());
    let rows = s_grid
        .par_iter()
        .map(|&s| {
            let w = cosine_propagator(decomp, s, g)?;
            let threshold = (eps * gnorm).powi(2);
            // Walk inwards from the farthest level. The first level `d*` that
            // pushes the exterior mass past the threshold gives the infimum
            // `ρ = d* - r` of admissible radii.
            let mut beyond = 0.0;
            let mut radius = 0.0;
            let mut i = 0;
            while i < order.len() {
                let d = space.dist(y0, order[i]);
                let mut level = 0.0;
                while i < order.len() && space.dist(y0, order[i]) == d {
                    level += w[order[i]].norm_sqr() * space.weight(order[i]);
                    i += 1;
                }
                if beyond + level > threshold {
                    radius = (d - ball.radius).max(0.0);
                    break;
                }
                beyond += level;
            }
            Ok(SpeedRow { s, radius, mass_outside: beyond.sqrt() / gnorm })
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma = rows
        .iter()
        .filter(|r| r.s > 0.0)
        .map(|r| r.radius / r.s)
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.s > 0.0).map(|r| (r.s, r.radius)).collect();
    let front_speed = if pts.len() < 2 {
        sigma
    } else {
        let k = pts.len() as f64;
        let (ms, mr) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
        let sxx: f64 = pts.iter().map(|p| (p.0 - ms).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - ms) * (p.1 - mr)).sum();
        if sxx > 0.0 { sxy / sxx } else { sigma }
    };
    Ok(SpeedReport { sigma, front_speed, eps, rows })
}

/// A pseudo-random function supported in `B(center, radius)` with zero
/// μ-mean, so it stays orthogonal to constants when those are deflated.
pub fn random_function_on_ball(space: &Space, ball: BallSpec, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inside = space.ball_members(ball.center, ball.radius);
    let values: Vec<f64> = inside.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
    let mass: f64 = inside.iter().map(|&x| space.weight(x)).sum();
    let mean = inside.iter().zip(&values).map(|(&x, v)| v * space.weight(x)).sum::<f64>() / mass;
    let mut g = CVector::zeros(space.n());
    for (&x, v) in inside.iter().zip(&values) {
        g[x] = Complex64::new(v - mean, 0.0);
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma44Row {
    pub g_id: usize,
    pub r: f64,
    pub j: i32,
    pub lhs: f64,
    pub budget: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma44Report {
    pub rows: Vec<Lemma44Row>,
    pub max_ratio: f64,
    /// `(j, max ratio over sources)`.
    pub per_j_max: Vec<(i32, f64)>,
    /// Largest over smallest positive entry of `per_j_max`.
    pub spread: f64,
    /// `‖F‖_{W^{2,γ+β/2}}`.
    pub f_norm: f64,
}

/// Weighted far-field energy of `F(2^{-j}√L) g` against
/// `(r 2^j)^{-β} ‖F‖²_{W^{2,γ+β/2}} ‖g‖²` for every source and `j`.
pub fn verify_lemma_dd1(
    space: &Space,
    decomp: &SpectralDecomposition,
    f: &EvenSpectralFunction,
    sources: &[(CVector, BallSpec)],
    j_range: (i32, i32),
    beta: f64,
    gamma: f64,
) -> Result<Lemma44Report> {
    if !(gamma > 0.5) || !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("need gamma > 1/2 and beta > 0, got {gamma}, {beta}")));
    }
    if j_range.0 > j_range.1 {
        return Err(Error::InvalidArgument(format!("empty j range {:?}", j_range)));
    }
    for (i, (g, ball)) in sources.iter().enumerate() {
        let inside = space.ball_members(ball.center, ball.radius);
        if g.iter().enumerate().any(|(x, v)| v.norm() != 0.0 && !inside.contains(&x)) {
            return Err(Error::InvalidArgument(format!("source {i} is not supported in its ball")));
        }
    }
    let f_norm = f.sobolev_norm(gamma + beta / 2.0)?;
    let tasks: Vec<(usize, i32)> = (0..sources.len())
        .flat_map(|i| (j_range.0..=j_range.1).map(move |j| (i, j)))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(i, j)| {
            let (g, ball) = &sources[i];
            let (y0, r) = (ball.center, ball.radius);
            let out = even_transform_apply(decomp, f, j, g)?;
            let lhs: f64 = (0..space.n())
                .filter(|&x| space.dist(x, y0) > 2.0 * r)
                .map(|x| out[x].norm_sqr() * (space.dist(x, y0) / r).powf(beta) * space.weight(x))
                .sum();
            let gn = norm_mu(space.weights(), g);
            let budget = (r * 2f64.powi(j)).powf(-beta) * f_norm * f_norm * gn * gn;
            Ok(Lemma44Row { g_id: i, r, j, lhs, budget, ratio: lhs / budget })
        })
        .collect::<Result<Vec<_>>>()?;
    let per_j_max: Vec<(i32, f64)> = (j_range.0..=j_range.1)
        .map(|j| (j, rows.iter().filter(|r| r.j == j).map(|r| r.ratio).fold(0.0, f64::max)))
        .collect();
    let max_ratio = per_j_max.iter().map(|p| p.1).fold(0.0, f64::max);
    let positive: Vec<f64> = per_j_max.iter().map(|p| p.1).filter(|&v| v > 0.0).collect();
    let spread = if positive.is_empty() {
        1.0
    } else {
        positive.iter().fold(0.0_f64, |m, &v| m.max(v)) / positive.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    };
    Ok(Lemma44Report { rows, max_ratio, per_j_max, spread, f_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn simpson_is_exact_on_cubics() {
        assert!((simpson(|x| x * x * x, 2.0, 3) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn bump_transform_and_norms() {
        let f = EvenSpectralFunction::band_limited_bump(3.0);
        // F(0) = (2π)^{-1} ∫ F̂.
        let direct = simpson(|xi| (1.0 - 1.0 / (1.0 - (xi / 3.0f64).powi(2))).exp(), 2.9999999, 20000) / std::f64::consts::PI;
        assert!((f.eval(0.0) - direct).abs() < 1e-6);
        assert!(f.sobolev_norm(1.0).unwrap() > f.sobolev_norm(0.0).unwrap());
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let f = EvenSpectralFunction::gaussian(1.0);
        let spec = f.sampled_transform(16.0, 8192).unwrap();
        let pi = std::f64::consts::PI;
        for (xi, v) in spec.xi.iter().zip(&spec.values).take(50) {
            let exact = pi.sqrt() * (-xi * xi / 4.0).exp();
            assert!((v - exact).abs() < 1e-12, "xi = {xi}");
        }
    }

    #[test]
    fn cosine_identity_and_zero_time() {
        let (_, op) = models::cycle_laplacian(16).unwrap();
        let dec = op.decompose().unwrap();
        let g = CVector::from_fn(16, |i, _| Complex64::new((i as f64).sin(), 0.0));
        let g = dec.apply_real_fn(|_| 1.0, &g);
        let out = cosine_propagator(&dec, 0.0, &g).unwrap();
        assert!((out - &g).norm() < 1e-12 * g.norm());
        assert!(cosine_propagator(&dec, -1.0, &g).is_err());
    }
}
