//! Experiment orchestration for `hardylab`: configuration, model building,
//! and CSV / SVG / manifest emission.

pub mod config;
mod experiments;
pub mod svg;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use hardylab::table::Table;

pub use config::ExperimentConfig;
pub use experiments::atom_specs;
use svg::PlotSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SpaceReport,
    HeatCheck,
    DgCheck,
    AtomBench,
    MultiplierVerify,
    MoleculeCheck,
    WaveCheck,
    Prop1Check,
    Lemma3Check,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::SpaceReport,
        Experiment::HeatCheck,
        Experiment::DgCheck,
        Experiment::AtomBench,
        Experiment::MultiplierVerify,
        Experiment::MoleculeCheck,
        Experiment::WaveCheck,
        Experiment::Prop1Check,
        Experiment::Lemma3Check,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SpaceReport => "space-report",
            Experiment::HeatCheck => "heat-check",
            Experiment::DgCheck => "dg-check",
            Experiment::AtomBench => "atom-bench",
            Experiment::MultiplierVerify => "multiplier-verify",
            Experiment::MoleculeCheck => "molecule-check",
            Experiment::WaveCheck => "wave-check",
            Experiment::Prop1Check => "prop1-check",
            Experiment::Lemma3Check => "lemma3-check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical gate failed: {0}")]
    Gate(String),
    #[error(transparent)]
    Module(hardylab::Error),
    #[error("io: {0}")]
    Io(String),
}

impl From<hardylab::Error> for CliError {
    fn from(e: hardylab::Error) -> Self {
        use hardylab::Error as E;
        match e {
            E::QuadratureTooCoarse(m) => CliError::Gate(format!("quadrature too coarse: {m}")),
            E::SobolevGate(m) => CliError::Gate(format!("Sobolev gate: {m}")),
            E::UnboundedFit(m) => CliError::Gate(format!("no bound fits: {m}")),
            E::UnknownBuilder(_) | E::Parse(_) => CliError::Config(e.to_string()),
            other => CliError::Module(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Gate(_) => 3,
            CliError::Module(_) | CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Gate(_) => "gate",
            CliError::Module(_) => "module",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable form printed to stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

/// What an experiment produced: tables to write and any gates that failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(Table, Option<PlotSpec>)>,
    pub gate_failures: Vec<String>,
    /// Extra JSON artifacts, `(file name, contents)`.
    pub json: Vec<(String, String)>,
}

impl Outcome {
    fn table(&mut self, t: Table, plot: Option<PlotSpec>) {
        self.tables.push((t, plot));
    }

    fn gate(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.gate_failures.push(msg());
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub jobs: usize,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub status: String,
    pub gate_failures: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    /// Directory that relative paths inside the config resolve against.
    pub base_dir: PathBuf,
}

/// Parses, validates and runs one experiment, writing CSVs, SVGs and
/// `manifest.json` into the output directory. A failed numerical gate still
/// writes every artifact before returning [`CliError::Gate`].
pub fn run(exp: Experiment, config_text: &str, opts: &RunOptions) -> Result<Manifest, CliError> {
    let start = Instant::now();
    let mut config = ExperimentConfig::from_json(config_text)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    config.validate(exp)?;
    let jobs = opts.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
    let outcome = pool.install(|| experiments::execute(exp, &config, &opts.base_dir))?;

    std::fs::create_dir_all(&opts.out_dir)?;
    let mut outputs = Vec::new();
    for (table, plot) in &outcome.tables {
        let csv = format!("{}.csv", table.name);
        table.write_csv(&opts.out_dir.join(&csv)).map_err(|e| CliError::Io(e.to_string()))?;
        outputs.push(csv);
        if let Some(spec) = plot {
            let name = format!("{}.svg", table.name);
            std::fs::write(opts.out_dir.join(&name), svg::render(table, spec))?;
            outputs.push(name);
        }
    }
    for (name, text) in &outcome.json {
        std::fs::write(opts.out_dir.join(name), text)?;
        outputs.push(name.clone());
    }
    let mut hasher = Sha256::new();
    hasher.update(config_text.as_bytes());
    hasher.update(config.seed.to_le_bytes());
    let manifest = Manifest {
        experiment: exp.name().into(),
        config_sha256: hex::encode(hasher.finalize()),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        jobs: pool.current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs,
        status: if outcome.gate_failures.is_empty() { "ok".into() } else { "gate_failed".into() },
        gate_failures: outcome.gate_failures.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(opts.out_dir.join("manifest.json"), text + "\n")?;
    if !outcome.gate_failures.is_empty() {
        return Err(CliError::Gate(outcome.gate_failures.join("; ")));
    }
    Ok(manifest)
}

/// Worker count: `HARDYLAB_JOBS` wins over the command-line value.
pub fn resolve_jobs(cli: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var("HARDYLAB_JOBS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("HARDYLAB_JOBS must be a positive integer, got {v:?}"))),
        _ => Ok(cli),
    }
}

/// Runs with the config read from a file; relative paths resolve next to it.
pub fn run_file(exp: Experiment, config: &Path, opts: &RunOptions) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let mut opts = opts.clone();
    opts.base_dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
    run(exp, &text, &opts)
}
