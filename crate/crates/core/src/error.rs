use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("metric violation: {0}")]
    MetricViolation(String),
    #[error("measure violation: {0}")]
    MeasureViolation(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate range: {0}")]
    DegenerateRange(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not self-adjoint: {0}")]
    NotSelfAdjoint(String),
    #[error("operator has negative spectrum: smallest eigenvalue {0:e}")]
    NegativeSpectrum(f64),
    #[error("operator has a nontrivial kernel: smallest eigenvalue {0:e}")]
    KernelNotTrivial(f64),
    #[error("multiplier undefined at eigenvalue {0:e}")]
    MultiplierDomainError(f64),
    #[error("no (C, c) pair on the grid fits the bound: {0}")]
    UnboundedFit(String),

    #[error("quadrature too coarse: {0}")]
    QuadratureTooCoarse(String),
    #[error("atom infeasible: {0}")]
    AtomInfeasible(String),

    #[error("function not negligible at the window edge: {0}")]
    SupportOverflow(String),
    #[error("Sobolev gate failed: {0}")]
    SobolevGate(String),

    #[error("unknown builder `{0}`")]
    UnknownBuilder(String),
    #[error("negative potential at sample {index}: {value}")]
    NegativePotential { index: usize, value: f64 },

    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
