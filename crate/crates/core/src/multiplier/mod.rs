//! Spectral multipliers, Hörmander-type Sobolev norms, dyadic partitions of
//! unity and the kernel estimates built on them.

mod experiments;
mod kernels;
mod partition;
mod sobolev;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex64;

pub use experiments::{
    theorem1_experiment, theorem2_experiment, AtomSpec, Theorem1Report, Theorem1Row, Theorem2Options, Theorem2Report,
    Theorem2Row,
};
pub use kernels::{
    dyadic_envelope, dyadic_piece, dyadic_piece_norms, phi_kernel, phi_multiplier, spectral_j_range, theta_kernel, verify_lemma3,
    verify_prop1, DyadicNormFit, Lemma3Report, Prop1Report,
};
pub use partition::{make_partition, Partition};
pub use sobolev::{
    hormander_constant, hormander_t_grid, log_grid, sobolev_norm, sobolev_norm_samples, HormanderReport, LpExponent,
    SobolevGrid, SobolevNorm,
};

type EvalFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A complex function `m` on `(0, ∞)`, evaluated on the spectrum of an operator.
#[derive(Clone)]
pub struct Multiplier {
    name: String,
    eval: Arc<EvalFn>,
    claimed_alpha: Option<f64>,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("name", &self.name)
            .field("claimed_alpha", &self.claimed_alpha)
            .finish()
    }
}

impl Multiplier {
    pub fn from_fn<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Multiplier { name: name.into(), eval: Arc::new(f), claimed_alpha: None }
    }

    pub fn from_real_fn<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_fn(name, move |l| Complex64::new(f(l), 0.0))
    }

    /// `m ≡ 1`.
    pub fn identity() -> Self {
        Self::from_real_fn("identity", |_| 1.0)
    }

    /// `m(λ) = λ^{iτ}`.
    pub fn imaginary_power(tau: f64) -> Self {
        Self::from_fn(format!("imaginary_power({tau})"), move |l| Complex64::from_polar(1.0, tau * l.ln()))
    }

    /// `m(λ) = 1 - e^{-τλ}`, the Laplace-transform multiplier `λ ∫₀^τ e^{-sλ} ds`.
    pub fn laplace_type(tau: f64) -> Self {
        Self::from_real_fn(format!("laplace_type({tau})"), move |l| -(-tau * l).exp_m1())
    }

    /// `m(λ) = e^{iτλ}`.
    pub fn oscillatory(tau: f64) -> Self {
        Self::from_fn(format!("oscillatory({tau})"), move |l| Complex64::from_polar(1.0, tau * l))
    }

    /// Piecewise-linear interpolation of `(λ, m(λ))` samples; undefined
    /// (NaN) outside the sampled range.
    pub fn table(mut samples: Vec<(f64, Complex64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("a multiplier table needs at least two samples".into()));
        }
        if samples.iter().any(|(l, v)| !l.is_finite() || !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("multiplier table has a non-finite entry".into()));
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if samples.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("multiplier table repeats an abscissa".into()));
        }
        let name = format!("table({} samples)", samples.len());
        Ok(Self::from_fn(name, move |l| {
            let i = samples.partition_point(|s| s.0 < l);
            if i == 0 {
                return if l == samples[0].0 { samples[0].1 } else { Complex64::new(f64::NAN, f64::NAN) };
            }
            if i == samples.len() {
                return Complex64::new(f64::NAN, f64::NAN);
            }
            let (l0, v0) = samples[i - 1];
            let (l1, v1) = samples[i];
            let s = (l - l0) / (l1 - l0);
            v0 + (v1 - v0) * s
        }))
    }

    pub fn with_claimed_alpha(mut self, alpha: f64) -> Self {
        self.claimed_alpha = Some(alpha);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn claimed_alpha(&self) -> Option<f64> {
        self.claimed_alpha
    }

    pub fn eval(&self, lambda: f64) -> Complex64 {
        (self.eval)(lambda)
    }

    /// `λ ↦ m(sλ)`.
    pub fn dilate(&self, s: f64) -> Multiplier {
        let inner = self.eval.clone();
        Multiplier {
            name: format!("{}(s={s})", self.name),
            eval: Arc::new(move |l| inner(s * l)),
            claimed_alpha: self.claimed_alpha,
        }
    }

    /// `λ ↦ m(√λ)`, so that `m(√L)` is the calculus of this multiplier at `L`.
    pub fn of_sqrt(&self) -> Multiplier {
        let inner = self.eval.clone();
        Multiplier {
            name: format!("{}(sqrt)", self.name),
            eval: Arc::new(move |l| inner(l.sqrt())),
            claimed_alpha: self.claimed_alpha,
        }
    }

    /// Pointwise product.
    pub fn product(&self, other: &Multiplier) -> Multiplier {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Multiplier {
            name: format!("{}*{}", self.name, other.name),
            eval: Arc::new(move |l| a(l) * b(l)),
            claimed_alpha: None,
        }
    }

    /// `sup |m|` over 4096 log-uniform samples of `[lo, hi]`.
    pub fn sup_on(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidArgument(format!("bad sampling interval [{lo}, {hi}]")));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let mut sup = 0.0_f64;
        for i in 0..4096 {
            let l = if i == 4095 { hi } else { (a + (b - a) * i as f64 / 4095.0).exp() };
            let v = self.eval(l).norm();
            if !v.is_finite() {
                return Err(Error::MultiplierDomainError(l));
            }
            sup = sup.max(v);
        }
        Ok(sup)
    }
}

/// JSON description of a multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSpec {
    pub name: String,
    #[serde(default)]
    pub params: MultiplierParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed_alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 3]>>,
}

impl MultiplierSpec {
    pub fn named(name: &str, tau: Option<f64>) -> Self {
        MultiplierSpec { name: name.into(), params: MultiplierParams { tau, samples: None }, claimed_alpha: None }
    }

    pub fn build(&self) -> Result<Multiplier> {
        let tau = || {
            self.params
                .tau
                .ok_or_else(|| Error::InvalidArgument(format!("multiplier '{}' needs params.tau", self.name)))
        };
        let m = match self.name.as_str() {
            "identity" => Multiplier::identity(),
            "imaginary_power" => Multiplier::imaginary_power(tau()?),
            "laplace_type" => Multiplier::laplace_type(tau()?),
            "oscillatory" => Multiplier::oscillatory(tau()?),
            "table" => {
                let samples = self
                    .params
                    .samples
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("multiplier 'table' needs params.samples".into()))?;
                Multiplier::table(samples.iter().map(|s| (s[0], Complex64::new(s[1], s[2]))).collect())?
            }
            other => return Err(Error::InvalidArgument(format!("unknown multiplier '{other}'"))),
        };
        Ok(match self.claimed_alpha {
            Some(a) => m.with_claimed_alpha(a),
            None => m,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let m = Multiplier::imaginary_power(1.0);
        let v = m.eval(std::f64::consts::E);
        assert!((v - Complex64::new(1f64.cos(), 1f64.sin())).norm() < 1e-15);
        assert!((Multiplier::laplace_type(2.0).eval(0.5).re - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((Multiplier::oscillatory(1.0).eval(2.0).im - 2f64.sin()).abs() < 1e-15);
        assert_eq!(Multiplier::identity().eval(123.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn table_interpolates_and_refuses_extrapolation() {
        let t = Multiplier::table(vec![(1.0, Complex64::new(0.0, 0.0)), (3.0, Complex64::new(2.0, -2.0))]).unwrap();
        assert_eq!(t.eval(2.0), Complex64::new(1.0, -1.0));
        assert_eq!(t.eval(1.0), Complex64::new(0.0, 0.0));
        assert!(t.eval(0.5).re.is_nan());
        assert!(t.eval(3.5).re.is_nan());
        assert!(matches!(t.sup_on(0.5, 2.0), Err(Error::MultiplierDomainError(_))));
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"name": "imaginary_power", "params": {"tau": 1.0}}"#;
        let spec: MultiplierSpec = serde_json::from_str(json).unwrap();
        let m = spec.build().unwrap();
        assert!((m.eval(2.0).norm() - 1.0).abs() < 1e-15);
        let bad: MultiplierSpec = serde_json::from_str(r#"{"name": "oscillatory"}"#).unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn dilation_and_sqrt() {
        let m = Multiplier::oscillatory(1.0);
        assert_eq!(m.dilate(3.0).eval(2.0), m.eval(6.0));
        assert_eq!(m.of_sqrt().eval(9.0), m.eval(3.0));
    }
}
