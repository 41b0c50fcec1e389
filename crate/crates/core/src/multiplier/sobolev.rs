//! Bessel-potential Sobolev norms `‖(I - d²/dx²)^{α/2} F‖_{L^p(ℝ)}` on a
//! periodic sampling window, and the Hörmander constant built from them.

use rayon::prelude::*;
use rustfft::FftPlanner;

use super::Multiplier;
use crate::error::{Error, Result};
use crate::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpExponent {
    Two,
    Infinity,
}

/// Sampling window `[-R, R)` with `N` equispaced nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevGrid {
    pub half_width: f64,
    pub samples: usize,
    pub alpha: f64,
    pub p: LpExponent,
}

/// Norm value together with the sampled transform, for callers that need both.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevNorm {
    pub value: f64,
    /// `F̂(ξ_k)` in FFT order, scaled to approximate the continuous transform.
    pub spectrum: Vec<Complex64>,
}

impl SobolevGrid {
    pub fn new(half_width: f64, samples: usize, alpha: f64, p: LpExponent) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("half width must be positive, got {half_width}")));
        }
        if samples < 4096 || !samples.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("sample count must be a power of two >= 4096, got {samples}")));
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(SobolevGrid { half_width, samples, alpha, p })
    }

    /// Grid used for Hörmander-type norms of functions supported in `(1/2, 2)`.
    pub fn hormander(alpha: f64, p: LpExponent) -> Self {
        SobolevGrid { half_width: 16.0, samples: 16384, alpha, p }
    }

    pub fn refined(&self) -> Self {
        SobolevGrid { samples: self.samples * 2, ..*self }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.samples as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    /// Angular frequency of FFT bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.samples as i64;
        let kk = if (k as i64) < n / 2 { k as i64 } else { k as i64 - n };
        std::f64::consts::PI * kk as f64 / self.half_width
    }
}

/// Samples `F` on the grid and evaluates its Sobolev norm.
pub fn sobolev_norm<F>(f: F, grid: &SobolevGrid) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    let samples: Vec<Complex64> = (0..grid.samples).map(|k| f(grid.node(k))).collect();
    Ok(sobolev_norm_samples(samples, grid)?.value)
}

/// Norm of pre-sampled values `F(x_k)`, `x_k = -R + k h`.
pub fn sobolev_norm_samples(mut buf: Vec<Complex64>, grid: &SobolevGrid) -> Result<SobolevNorm> {
    let n = grid.samples;
    if buf.len() != n {
        return Err(Error::DimensionMismatch(format!("{} samples on a grid of {n}", buf.len())));
    }
    if buf.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidArgument("sampled function is not finite".into()));
    }
    let peak = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = buf[..8].iter().chain(&buf[n - 8..]).map(|v| v.norm()).fold(0.0, f64::max);
    if edge > 1e-12 * peak {
        return Err(Error::SupportOverflow(format!(
            "|F| reaches {edge:.3e} at the edge of [-{R}, {R}] (peak {peak:.3e})",
            R = grid.half_width
        )));
    }
    let h = grid.spacing();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    // Scaled by h the bins approximate F̂(ξ_k) up to the phase e^{iξ_k R}.
    let spectrum: Vec<Complex64> = buf.iter().map(|v| v * h).collect();
    for (k, v) in buf.iter_mut().enumerate() {
        let xi = grid.frequency(k);
        *v *= (1.0 + xi * xi).powf(grid.alpha / 2.0) / n as f64;
    }
    let value = match grid.p {
        LpExponent::Two => {
            planner.plan_fft_inverse(n).process(&mut buf);
            (h * buf.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
        }
        LpExponent::Infinity => {
            let fine = upsample(&mut planner, &buf, SUP_UPSAMPLE);
            refined_peak(&fine)
        }
    };
    Ok(SobolevNorm { value, spectrum })
}

/// Trigonometric interpolation factor used when taking the supremum.
const SUP_UPSAMPLE: usize = 4;

/// Inverse transform of `spec` (FFT order, already divided by `n`) on a grid
/// `factor` times finer, by zero-padding the high frequencies.
fn upsample(planner: &mut FftPlanner<f64>, spec: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = spec.len();
    let m = n * factor;
    let half = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    out[..half].copy_from_slice(&spec[..half]);
    out[m - half + 1..].copy_from_slice(&spec[half + 1..]);
    // The Nyquist bin is split between the two signed frequencies.
    out[half] = spec[half] * 0.5;
    out[m - half] = spec[half] * 0.5;
    planner.plan_fft_inverse(m).process(&mut out);
    out
}

/// Largest `|v|`, refined by the vertex of the parabola through the peak sample
/// and its periodic neighbours.
fn refined_peak(v: &[Complex64]) -> f64 {
    let n = v.len();
    let (k, top) = v
        .iter()
        .map(|x| x.norm())
        .enumerate()
        .fold((0, 0.0), |acc, (i, a)| if a > acc.1 { (i, a) } else { acc });
    let (a, c) = (v[(k + n - 1) % n].norm(), v[(k + 1) % n].norm());
    let curv = a - 2.0 * top + c;
    if curv >= 0.0 {
        return top;
    }
    top - (c - a) * (c - a) / (8.0 * curv)
}

/// `sup_t ‖η(·) m(t·)‖_{W^{p,α}}` over a time grid, with the maximiser.
#[derive(Debug, Clone, PartialEq)]
pub struct HormanderReport {
    pub value: f64,
    pub t_at_max: f64,
    pub per_t: Vec<(f64, f64)>,
}

/// Log-uniform grid over `[lo, hi]` with at least `per_octave` points per octave.
pub fn log_grid(lo: f64, hi: f64, per_octave: usize) -> Vec<f64> {
    let octaves = (hi / lo).log2().max(0.0);
    let steps = ((octaves * per_octave as f64).ceil() as usize).max(1);
    (0..=steps)
        .map(|i| lo * 2f64.powf(octaves * i as f64 / steps as f64))
        .collect()
}

/// Dilations that matter for a spectrum in `[λ₁, λ_n]`: `η(·) m(t·)` only
/// sees `m` on `(t/2, 2t)`.
pub fn hormander_t_grid(lambda_min: f64, lambda_max: f64) -> Vec<f64> {
    log_grid(lambda_min / 4.0, 4.0 * lambda_max, 16)
}

pub fn hormander_constant<E>(m: &Multiplier, eta: E, grid: &SobolevGrid, t_grid: &[f64]) -> Result<HormanderReport>
where
    E: Fn(f64) -> f64 + Sync,
{
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("time grid must be nonempty and positive".into()));
    }
    let per_t: Vec<Result<(f64, f64)>> = t_grid
        .par_iter()
        .map(|&t| {
            let v = sobolev_norm(
                |x| {
                    let e = if x > 0.0 { eta(x) } else { 0.0 };
                    if e == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        m.eval(t * x) * e
                    }
                },
                grid,
            )?;
            Ok((t, v))
        })
        .collect();
    let per_t = per_t.into_iter().collect::<Result<Vec<_>>>()?;
    let (t_at_max, value) = per_t
        .iter()
        .copied()
        .fold((t_grid[0], f64::NEG_INFINITY), |acc, (t, v)| if v > acc.1 { (t, v) } else { acc });
    Ok(HormanderReport { value, t_at_max, per_t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(SobolevGrid::new(1.0, 1000, 0.0, LpExponent::Two).is_err());
        assert!(SobolevGrid::new(1.0, 2048, 0.0, LpExponent::Two).is_err());
        assert!(SobolevGrid::new(1.0, 4096, -1.0, LpExponent::Two).is_err());
        assert!(SobolevGrid::new(1.0, 4096, 0.5, LpExponent::Infinity).is_ok());
    }

    #[test]
    fn gaussian_l2() {
        let g = SobolevGrid::new(10.0, 4096, 0.0, LpExponent::Two).unwrap();
        let v = sobolev_norm(|x| Complex64::new((-x * x).exp(), 0.0), &g).unwrap();
        assert!((v - (std::f64::consts::PI / 2.0).powf(0.25)).abs() < 1e-6);
    }

    #[test]
    fn sup_norm_at_alpha_zero() {
        let g = SobolevGrid::new(10.0, 4096, 0.0, LpExponent::Infinity).unwrap();
        let v = sobolev_norm(|x| Complex64::new(0.0, 3.0 * (-x * x).exp()), &g).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn wide_function_overflows() {
        let g = SobolevGrid::new(2.0, 4096, 1.0, LpExponent::Two).unwrap();
        let r = sobolev_norm(|x| Complex64::new((-x * x / 4.0).exp(), 0.0), &g);
        assert!(matches!(r, Err(Error::SupportOverflow(_))));
    }

    #[test]
    fn log_grid_density() {
        let g = log_grid(1.0, 16.0, 16);
        assert_eq!(g.len(), 65);
        assert!((g[64] - 16.0).abs() < 1e-12);
    }
}
