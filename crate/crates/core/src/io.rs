//! JSON inputs (spaces, operators, model specs) and atom dumps.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{Atom, BallSpec, Molecule};
use crate::models;
use crate::space::Space;
use crate::spectral::{KernelHandling, Operator};
use crate::CVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricSpec {
    Matrix(Vec<Vec<f64>>),
    /// `[i, j, length]` triples, completed by shortest paths.
    Edges(Vec<(usize, usize, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub points: Vec<String>,
    pub metric: MetricSpec,
    pub weights: Vec<f64>,
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("row of length {} in a {n}-row matrix", r.len())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl SpaceFile {
    pub fn build(&self) -> Result<Space> {
        let n = self.points.len();
        let dist = match &self.metric {
            MetricSpec::Matrix(rows) => matrix_from_rows(rows)?,
            MetricSpec::Edges(edges) => crate::space::shortest_paths(n, edges)?,
        };
        if dist.nrows() != n {
            return Err(Error::DimensionMismatch(format!("{n} points but a {}-point metric", dist.nrows())));
        }
        Space::with_labels(dist, self.weights.clone(), self.points.clone())
    }
}

pub fn load_space(path: &Path) -> Result<Space> {
    let file: SpaceFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    file.build()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Path(PathBuf),
    Inline(SpaceFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Constant(f64),
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub h: Option<f64>,
    /// Weighted-graph file: `{"n", "edges": [[x, y, conductance, length]], "weights"}`.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub builder: String,
    #[serde(default)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedGraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64, f64)>,
    pub weights: Vec<f64>,
}

impl ModelSpec {
    pub fn named(builder: &str, n: usize) -> Self {
        ModelSpec { builder: builder.into(), params: ModelParams { n: Some(n), ..Default::default() } }
    }
}

fn require_n(params: &ModelParams, builder: &str) -> Result<usize> {
    params
        .n
        .ok_or_else(|| Error::InvalidArgument(format!("builder {builder} needs params.n")))
}

/// Builds one of `cycle_laplacian`, `path_laplacian`, `schrodinger_1d`, `weighted_graph`.
pub fn build_model(spec: &ModelSpec) -> Result<(Arc<Space>, Operator)> {
    let p = &spec.params;
    match spec.builder.as_str() {
        "cycle_laplacian" => models::cycle_laplacian(require_n(p, &spec.builder)?),
        "path_laplacian" => models::path_laplacian(require_n(p, &spec.builder)?),
        "schrodinger_1d" => {
            let n = require_n(p, &spec.builder)?;
            let v = match &p.potential {
                None => vec![0.0; n],
                Some(PotentialSpec::Constant(c)) => vec![*c; n],
                Some(PotentialSpec::Samples(s)) => s.clone(),
            };
            models::schrodinger_1d(n, &v, p.h)
        }
        "weighted_graph" => {
            let path = p
                .file
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("weighted_graph needs params.file".into()))?;
            let g: WeightedGraphFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            models::weighted_graph(g.n, &g.edges, g.weights)
        }
        other => Err(Error::UnknownBuilder(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    /// Kernel `K` of `(Lf)(x) = Σ_y K(x, y) f(y) μ(y)`.
    Matrix { matrix: Vec<Vec<f64>> },
    Builder(ModelSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandlingName {
    Forbid,
    Deflate,
    Shift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    /// Required for explicit matrices, ignored by builders.
    #[serde(default)]
    pub space: Option<SpaceRef>,
    pub operator: OperatorSpec,
    #[serde(default)]
    pub kernel_handling: Option<HandlingName>,
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default)]
    pub locality_radius: Option<f64>,
}

impl OperatorFile {
    /// `base` resolves relative space paths.
    pub fn build(&self, base: &Path) -> Result<(Arc<Space>, Operator)> {
        let (space, op) = match &self.operator {
            OperatorSpec::Builder(spec) => build_model(spec)?,
            OperatorSpec::Matrix { matrix } => {
                let space = match &self.space {
                    Some(SpaceRef::Inline(f)) => f.build()?,
                    Some(SpaceRef::Path(p)) => load_space(&base.join(p))?,
                    None => return Err(Error::InvalidArgument("an explicit operator matrix needs a space".into())),
                };
                let space = Arc::new(space);
                let op = Operator::new(space.clone(), matrix_from_rows(matrix)?, self.locality_radius)?;
                (space, op)
            }
        };
        let handling = match (&self.kernel_handling, self.shift) {
            (None, _) => return Ok((space, op)),
            (Some(HandlingName::Forbid), _) => KernelHandling::Forbid,
            (Some(HandlingName::Deflate), _) => KernelHandling::Deflate,
            (Some(HandlingName::Shift), Some(eps)) => KernelHandling::Shift(eps),
            (Some(HandlingName::Shift), None) => {
                return Err(Error::InvalidArgument("kernel_handling shift needs a shift value".into()))
            }
        };
        let op = op.with_handling(handling)?;
        Ok((space, op))
    }
}

pub fn load_operator(path: &Path) -> Result<(Arc<Space>, Operator)> {
    let file: OperatorFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    file.build(path.parent().unwrap_or(Path::new(".")))
}

/// Atom or molecule vectors as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDump {
    pub ball: BallSpec,
    #[serde(rename = "M")]
    pub order: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub a: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
}

fn pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl From<&Atom> for AtomDump {
    fn from(a: &Atom) -> Self {
        AtomDump { ball: a.ball, order: a.order, epsilon: None, a: pairs(&a.a), b: pairs(&a.b) }
    }
}

impl From<&Molecule> for AtomDump {
    fn from(m: &Molecule) -> Self {
        AtomDump { ball: m.ball, order: m.order, epsilon: Some(m.epsilon), a: pairs(&m.a_tilde), b: pairs(&m.b_tilde) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_file_roundtrip() {
        let json = r#"{"points": ["a", "b", "c"], "metric": {"edges": [[0, 1, 1.0], [1, 2, 2.0]]}, "weights": [1, 1, 2]}"#;
        let f: SpaceFile = serde_json::from_str(json).unwrap();
        let s = f.build().unwrap();
        assert_eq!(s.dist(0, 2), 3.0);
        assert_eq!(s.labels()[2], "c");
    }

    #[test]
    fn unknown_builder() {
        let spec = ModelSpec::named("torus", 4);
        assert!(matches!(build_model(&spec), Err(Error::UnknownBuilder(_))));
    }

    #[test]
    fn operator_file_with_builder_and_matrix() {
        let json = r#"{"operator": {"builder": "cycle_laplacian", "params": {"n": 6}}}"#;
        let f: OperatorFile = serde_json::from_str(json).unwrap();
        let (space, _) = f.build(Path::new(".")).unwrap();
        assert_eq!(space.n(), 6);

        let json = r#"{"space": {"points": ["x", "y"], "metric": {"matrix": [[0, 1], [1, 0]]}, "weights": [1, 1]},
                       "operator": {"matrix": [[1, -1], [-1, 1]]}, "kernel_handling": "shift", "shift": 0.5}"#;
        let f: OperatorFile = serde_json::from_str(json).unwrap();
        let (_, op) = f.build(Path::new(".")).unwrap();
        let dec = op.decompose().unwrap();
        assert!((dec.eigenvalues()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn schrodinger_constant_potential() {
        let json = r#"{"builder": "schrodinger_1d", "params": {"n": 16, "potential": 1.0}}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        let (_, op) = build_model(&spec).unwrap();
        let dec = op.decompose().unwrap();
        assert!(dec.eigenvalues()[0] > 1.0);
    }
}
