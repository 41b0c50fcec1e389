//! Discretisation of `dt/t` on `[t_min, t_max]`.

use crate::error::{Error, Result};
use crate::space::Space;
use crate::spectral::SpectralDecomposition;

/// Gauss–Legendre nodes in `ln t` on log-uniform cells.
///
/// Cell boundaries are the octave subdivisions plus every breakpoint passed
/// in (the distinct distances of the space), so the cone integrand, which
/// jumps whenever `t` crosses a distance, is smooth on each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeQuadrature {
    t_min: f64,
    t_max: f64,
    steps_per_octave: usize,
    closed_cone: bool,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const GAUSS_OFFSET: f64 = 0.577_350_269_189_625_8; // 1/√3

impl ConeQuadrature {
    pub fn new(t_min: f64, t_max: f64, steps_per_octave: usize, breakpoints: &[f64]) -> Result<Self> {
        if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if steps_per_octave == 0 {
            return Err(Error::InvalidArgument("steps_per_octave must be at least 1".into()));
        }
        let (lo, hi) = (t_min.ln(), t_max.ln());
        let cells = (((hi - lo) / std::f64::consts::LN_2) * steps_per_octave as f64).ceil() as usize;
        let mut cuts: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
        cuts.extend(breakpoints.iter().filter(|&&b| b > t_min && b < t_max).map(|b| b.ln()));
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
        let mut nodes = Vec::with_capacity(2 * cuts.len());
        let mut weights = Vec::with_capacity(2 * cuts.len());
        for w in cuts.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            nodes.push((mid - half * GAUSS_OFFSET).exp());
            nodes.push((mid + half * GAUSS_OFFSET).exp());
            weights.push(half);
            weights.push(half);
        }
        Ok(ConeQuadrature { t_min, t_max, steps_per_octave, closed_cone: true, nodes, weights })
    }

    /// Spectrum-adapted default with the space's distances as breakpoints.
    ///
    /// `t_max = 10/√λ₁`. `t_min` is `0.1/√λ_n`, lowered when needed so that
    /// the lower-tail truncation stays below `1e-6 ‖f‖₂`.
    pub fn for_spectrum(space: &Space, decomp: &SpectralDecomposition, steps_per_octave: usize) -> Result<Self> {
        let (l1, ln) = (decomp.lambda_min(), decomp.lambda_max());
        let t_min = (0.1 / ln.sqrt()).min(1e-3 * space.min_weight().powf(0.25) / ln.sqrt());
        let t_max = 10.0 / l1.sqrt();
        Self::new(t_min, t_max, steps_per_octave, &space.distinct_distances())
    }

    /// Use the open cone `d(x, y) < t` instead of `d(x, y) <= t`.
    pub fn with_open_cone(mut self, open: bool) -> Self {
        self.closed_cone = !open;
        self
    }

    /// Same construction with all times multiplied by `s`.
    pub fn rescaled(&self, s: f64, breakpoints: &[f64]) -> Result<Self> {
        Ok(Self::new(self.t_min * s, self.t_max * s, self.steps_per_octave, breakpoints)?.with_open_cone(!self.closed_cone))
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps_per_octave(&self) -> usize {
        self.steps_per_octave
    }

    pub fn closed_cone(&self) -> bool {
        self.closed_cone
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights of `dt/t`; they sum to `ln(t_max/t_min)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn in_cone(&self, d: f64, t: f64) -> bool {
        if self.closed_cone {
            d <= t
        } else {
            d < t
        }
    }

    /// `Σ_k w_k (t_k² λ)² e^{-2 t_k² λ}`: the discrete square-function profile
    /// of a single eigenvalue.
    pub fn scalar_profile(&self, lambda: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| {
                let u = t * t * lambda;
                w * u * u * (-2.0 * u).exp()
            })
            .sum()
    }
}

/// `∫ (u e^{-u})² du/(2u)` over `u ∈ [0, u0]`, bounded by `u0²/4` and by the full integral `1/8`.
fn lower_tail(u0: f64) -> f64 {
    (u0 * u0 / 4.0).min(0.125)
}

/// `½ ∫_{u0}^∞ u e^{-2u} du = ½ e^{-2u0} (u0/2 + 1/4)`; the integrand only
/// decreases in `λ` past `u0 = 1/2`, so smaller `u0` gets the trivial bound.
fn upper_tail(u0: f64) -> f64 {
    if u0 < 0.5 {
        0.125
    } else {
        0.5 * (-2.0 * u0).exp() * (u0 / 2.0 + 0.25)
    }
}

/// Upper bound on the pointwise error `|S_h f(x) - S_h^{quad} f(x)|` from the
/// neglected times `t ∉ [t_min, t_max]`.
///
/// The neglected part of `S_h f(x)²` is at most
/// `μ_min^{-1} ‖f‖² max_i ∫_tails (t²λ_i e^{-t²λ_i})² dt/t`, using
/// `V(x, t) >= μ(x)` and Plancherel in the eigenbasis.
pub fn truncation_error_bound(space: &Space, decomp: &SpectralDecomposition, quad: &ConeQuadrature, f_l2_norm: f64) -> f64 {
    let (l1, ln) = (decomp.lambda_min(), decomp.lambda_max());
    let low = lower_tail(quad.t_min * quad.t_min * ln);
    let high = upper_tail(quad.t_max * quad.t_max * l1);
    f_l2_norm * ((low + high) / space.min_weight()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_log_ratio() {
        let q = ConeQuadrature::new(0.01, 37.0, 8, &[0.5, 1.0, 1.0, 2.0, 100.0]).unwrap();
        let s: f64 = q.weights().iter().sum();
        assert!((s - (37.0f64 / 0.01).ln()).abs() < 1e-12);
        assert!(q.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(ConeQuadrature::new(1.0, 1.0, 8, &[]).is_err());
        assert!(ConeQuadrature::new(1.0, 2.0, 0, &[]).is_err());
    }

    #[test]
    fn scalar_profile_converges_to_one_eighth() {
        // ∫₀^∞ (t²λ)² e^{-2t²λ} dt/t = Γ(2)/8 for every λ.
        let q = ConeQuadrature::new(1e-4, 1e3, 8, &[]).unwrap();
        for l in [0.1, 1.0, 7.0] {
            assert!((q.scalar_profile(l) - 0.125).abs() < 1e-6);
        }
    }

    #[test]
    fn tails_in_closed_form() {
        // Spectrum {1}, t_max = 10: the tail is ½e^{-200}(50.25).
        assert!((upper_tail(100.0) - 0.5 * (-200.0f64).exp() * 50.25).abs() < 1e-300);
        assert_eq!(lower_tail(1e-3), 1e-6 / 4.0);
        assert_eq!(upper_tail(0.1), 0.125);
    }
}
