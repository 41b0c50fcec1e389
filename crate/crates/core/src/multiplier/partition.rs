//! Smooth dyadic partition of unity on `(0, ∞)`.

use crate::error::{Error, Result};

/// `ψ(λ) = h(log₂ λ) / Σ_k h(log₂ λ - k)` with `h(s) = exp(-σ / (1 - s²))`
/// on `(-1, 1)`, so that `Σ_j ψ(2^{-j} λ) = 1` and `supp ψ ⊂ (1/2, 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    sharpness: f64,
}

pub fn make_partition(sharpness: f64) -> Result<Partition> {
    if !(sharpness > 0.0 && sharpness.is_finite()) {
        return Err(Error::InvalidArgument(format!("bump sharpness must be positive, got {sharpness}")));
    }
    Ok(Partition { sharpness })
}

impl Default for Partition {
    fn default() -> Self {
        Partition { sharpness: 1.0 }
    }
}

impl Partition {
    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    /// The bump `h` on the logarithmic axis.
    pub fn h(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            0.0
        } else {
            (-self.sharpness / (1.0 - s * s)).exp()
        }
    }

    /// Un-normalised bump `η(λ) = h(log₂ λ)`, supported in `(1/2, 2)`.
    pub fn eta(&self, lambda: f64) -> f64 {
        if !(lambda > 0.0) {
            return 0.0;
        }
        self.h(lambda.log2())
    }

    pub fn psi(&self, lambda: f64) -> f64 {
        if !(lambda > 0.5 && lambda < 2.0) {
            return 0.0;
        }
        let s = lambda.log2();
        let k = s.floor();
        // Only the two integer shifts bracketing s can contribute.
        let denom = self.h(s - k) + self.h(s - k - 1.0);
        self.h(s) / denom
    }

    /// `Σ_{j = lo}^{hi} ψ(2^{-j} λ)`.
    pub fn partial_sum(&self, lambda: f64, lo: i32, hi: i32) -> f64 {
        (lo..=hi).map(|j| self.psi(lambda * 2f64.powi(-j))).sum()
    }

    /// The `j` with `ψ(2^{-j} λ) != 0`: at most two consecutive integers.
    pub fn active_octaves(&self, lambda: f64) -> Vec<i32> {
        let s = lambda.log2();
        let base = s.floor() as i32;
        [base, base + 1]
            .into_iter()
            .filter(|&j| self.psi(lambda * 2f64.powi(-j)) != 0.0)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_to_one() {
        let p = make_partition(1.0).unwrap();
        assert!((p.partial_sum(1.0, -60, 60) - 1.0).abs() < 1e-12);
        assert!((p.partial_sum(1.37, -60, 60) - 1.0).abs() < 1e-10);
        for i in 0..1000 {
            let l = 10f64.powf(-6.0 + 12.0 * i as f64 / 999.0);
            assert!((p.partial_sum(l, -60, 60) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn support_is_open_dyadic_interval() {
        let p = Partition::default();
        assert_eq!(p.psi(0.4), 0.0);
        assert_eq!(p.psi(2.1), 0.0);
        assert_eq!(p.psi(0.5), 0.0);
        assert_eq!(p.psi(2.0), 0.0);
        assert!(p.psi(0.51) > 0.0 && p.psi(1.99) > 0.0);
        assert!((p.psi(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn active_octaves_are_consecutive() {
        let p = Partition::default();
        assert_eq!(p.active_octaves(1.0), vec![0]);
        assert_eq!(p.active_octaves(3.0), vec![1, 2]);
        assert!(make_partition(0.0).is_err());
    }
}
