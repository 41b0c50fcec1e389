//! Experiment configuration and up-front validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use hardylab::io::ModelSpec;
use hardylab::multiplier::MultiplierSpec;
use hardylab::wave::EvenSpectralFunction;

use crate::{CliError, Experiment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_steps")]
    pub steps_per_octave: usize,
    /// Use the strict cone `d(x, y) < t` instead of `d(x, y) <= t`.
    #[serde(default)]
    pub open_cone: bool,
}

fn default_steps() -> usize {
    8
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { steps_per_octave: 8, open_cone: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEnsemble {
    pub radii: Vec<f64>,
    #[serde(default = "default_per_radius")]
    pub per_radius: usize,
    /// Atom order `M` for atom-bench; molecule order for molecule-check.
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_per_radius() -> usize {
    3
}

fn default_order() -> usize {
    1
}

impl Default for AtomEnsemble {
    fn default() -> Self {
        AtomEnsemble { radii: vec![2.5, 4.5], per_radius: 3, order: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_per_octave")]
    pub per_octave: usize,
}

fn default_per_octave() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgConfig {
    pub radius: f64,
    /// Ball centre pairs.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Gaussian { scale: f64 },
    Bump { cutoff: f64 },
    Cosines { terms: Vec<(f64, f64)> },
}

impl FunctionSpec {
    pub fn build(&self) -> EvenSpectralFunction {
        match self {
            FunctionSpec::Gaussian { scale } => EvenSpectralFunction::gaussian(*scale),
            FunctionSpec::Bump { cutoff } => EvenSpectralFunction::band_limited_bump(*cutoff),
            FunctionSpec::Cosines { terms } => EvenSpectralFunction::cosines(terms.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    #[serde(default = "default_function")]
    pub function: FunctionSpec,
    #[serde(default = "default_j_range")]
    pub j_range: (i32, i32),
    #[serde(default = "default_wave_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_per_radius")]
    pub sources_per_radius: usize,
    /// Propagation times; defaults to nine equally spaced times up to a quarter diameter.
    #[serde(default)]
    pub s_grid: Option<Vec<f64>>,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_function() -> FunctionSpec {
    FunctionSpec::Gaussian { scale: 1.0 }
}

fn default_j_range() -> (i32, i32) {
    (-2, 4)
}

fn default_wave_radii() -> Vec<f64> {
    vec![2.5, 6.5]
}

fn default_eps() -> f64 {
    1e-6
}

impl Default for WaveConfig {
    fn default() -> Self {
        WaveConfig {
            function: default_function(),
            j_range: default_j_range(),
            radii: default_wave_radii(),
            sources_per_radius: 3,
            s_grid: None,
            eps: default_eps(),
        }
    }
}

fn default_multipliers() -> Vec<MultiplierSpec> {
    vec![MultiplierSpec::named("identity", None)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: Option<ModelSpec>,
    /// Operator JSON file, used instead of `model`.
    #[serde(default)]
    pub operator_file: Option<PathBuf>,
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<MultiplierSpec>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub atoms: AtomEnsemble,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Growth exponent of the space.
    #[serde(default)]
    pub q: Option<f64>,
    /// Molecule decay rate.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub times: Option<TimeGrid>,
    /// Highest time derivative for heat-check.
    #[serde(default)]
    pub derivative: u32,
    #[serde(default)]
    pub q_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub dg: Option<DgConfig>,
    #[serde(default)]
    pub wave: WaveConfig,
    /// `N` in `(t²λ)^N e^{-t²λ} m(λ)`.
    #[serde(default = "default_phi_order")]
    pub phi_order: u32,
    #[serde(default)]
    pub j_range: Option<(i32, i32)>,
    #[serde(default)]
    pub seed: u64,
}

fn default_phi_order() -> u32 {
    1
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require(name: &str, v: Option<f64>, exp: Experiment) -> Result<f64, CliError> {
    let v = v.ok_or_else(|| config_err(format!("{} needs `{name}`", exp.name())))?;
    if !v.is_finite() {
        return Err(config_err(format!("`{name}` must be finite")));
    }
    Ok(v)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// `(α, q)` for runs of the `H¹` multiplier theorem, checked `α > q/2`.
    pub fn theorem1_exponents(&self, exp: Experiment) -> Result<(f64, f64), CliError> {
        let alpha = require("alpha", self.alpha, exp)?;
        let q = require("q", self.q, exp)?;
        if !(alpha > q / 2.0) {
            return Err(config_err(format!("need alpha > q/2, got alpha = {alpha}, q = {q}")));
        }
        Ok((alpha, q))
    }

    /// `(α, q, M)` for molecule runs, checked `α > (q+1)/2` and `M > q/4`.
    pub fn theorem2_exponents(&self, exp: Experiment) -> Result<(f64, f64, usize), CliError> {
        let alpha = require("alpha", self.alpha, exp)?;
        let q = require("q", self.q, exp)?;
        if !(alpha > (q + 1.0) / 2.0) {
            return Err(config_err(format!("need alpha > (q+1)/2, got alpha = {alpha}, q = {q}")));
        }
        let m = self.atoms.order;
        if !(m as f64 > q / 4.0) {
            return Err(config_err(format!("need M > q/4, got M = {m}, q = {q}")));
        }
        Ok((alpha, q, m))
    }

    /// `β` for the weighted kernel checks: the configured value, or
    /// `min(1/2, α - q/2 - 0.01)`.
    pub fn kernel_beta(&self, alpha: f64, q: f64) -> Result<f64, CliError> {
        let beta = self.beta.unwrap_or_else(|| 0.5_f64.min(alpha - q / 2.0 - 0.01));
        if !(beta > 0.0) {
            return Err(config_err(format!("weight exponent beta must be positive, got {beta}")));
        }
        Ok(beta)
    }

    /// Checks everything that does not need the model; runs before any computation.
    pub fn validate(&self, exp: Experiment) -> Result<(), CliError> {
        match (&self.model, &self.operator_file) {
            (None, None) => return Err(config_err("config needs `model` or `operator_file`")),
            (Some(_), Some(_)) => return Err(config_err("give only one of `model` and `operator_file`")),
            _ => {}
        }
        if self.quadrature.steps_per_octave == 0 {
            return Err(config_err("steps_per_octave must be at least 1"));
        }
        if let Some(t) = &self.times {
            if !(t.min > 0.0 && t.max >= t.min && t.per_octave > 0) {
                return Err(config_err(format!("bad time grid {t:?}")));
            }
        }
        let check_radii = |radii: &[f64], what: &str| {
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                Err(config_err(format!("{what} radii must be positive and nonempty")))
            } else {
                Ok(())
            }
        };
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(config_err(format!("epsilon must be positive, got {e}")));
            }
        }
        if !(self.phi_order == 1 || self.phi_order == 2) {
            return Err(config_err(format!("phi_order must be 1 or 2, got {}", self.phi_order)));
        }
        match exp {
            Experiment::SpaceReport | Experiment::HeatCheck | Experiment::DgCheck => {}
            Experiment::AtomBench => {
                check_radii(&self.atoms.radii, "atom")?;
                if self.atoms.order == 0 {
                    return Err(config_err("atom order must be at least 1"));
                }
            }
            Experiment::MultiplierVerify => {
                check_radii(&self.atoms.radii, "atom")?;
                self.theorem1_exponents(exp)?;
            }
            Experiment::Prop1Check | Experiment::Lemma3Check => {
                let (alpha, q) = self.theorem1_exponents(exp)?;
                self.kernel_beta(alpha, q)?;
            }
            Experiment::MoleculeCheck => {
                check_radii(&self.atoms.radii, "atom")?;
                self.theorem2_exponents(exp)?;
            }
            Experiment::WaveCheck => {
                check_radii(&self.wave.radii, "source")?;
                let beta = self.beta.unwrap_or(1.0);
                let gamma = self.gamma.unwrap_or(0.6);
                if !(gamma > 0.5) || !(beta > 0.0) {
                    return Err(config_err(format!("need gamma > 1/2 and beta > 0, got gamma = {gamma}, beta = {beta}")));
                }
                if self.wave.j_range.0 > self.wave.j_range.1 {
                    return Err(config_err("wave j_range is empty"));
                }
                if !(self.wave.eps > 0.0 && self.wave.eps < 0.5) {
                    return Err(config_err("wave eps must lie in (0, 0.5)"));
                }
                if let FunctionSpec::Cosines { .. } = self.wave.function {
                    return Err(config_err("a cosine sum has no finite Sobolev norm; use gaussian or bump"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_at_half_q_is_rejected() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": {"builder": "cycle_laplacian", "params": {"n": 8}}, "alpha": 0.5, "q": 1.0}"#,
        )
        .unwrap();
        assert!(matches!(cfg.validate(Experiment::MultiplierVerify), Err(CliError::Config(_))));
    }

    #[test]
    fn molecule_needs_order_above_quarter_q() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": {"builder": "cycle_laplacian", "params": {"n": 8}}, "alpha": 10.0, "q": 4.0,
                "atoms": {"radii": [2.5], "order": 1}}"#,
        )
        .unwrap();
        assert!(cfg.validate(Experiment::MoleculeCheck).is_err());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(ExperimentConfig::from_json(r#"{"modle": {}}"#).is_err());
    }
}
