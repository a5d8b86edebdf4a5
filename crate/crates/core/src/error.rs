use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain specification: {0}")]
    InvalidChain(String),

    #[error("{n_qubits} qubits exceeds the configured maximum of {max_qubits}")]
    SizeLimit { n_qubits: usize, max_qubits: usize },

    #[error("site index {site} out of range 1..={n_qubits}")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("matrix is not Hermitian (max |M - M^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("invalid bath specification: {0}")]
    InvalidBath(String),

    #[error("invalid quadrature configuration: {0}")]
    InvalidQuadrature(String),

    #[error("Bose occupation has a pole at omega = mu = {0}")]
    BosePole(f64),

    #[error("quadrature did not converge{context}: error estimate {achieved:e} above tolerance {requested:e}")]
    Quadrature {
        achieved: f64,
        requested: f64,
        context: String,
    },

    #[error("degenerate spectrum: minimum gap {gap:e} is below the threshold {threshold:e}")]
    Degenerate { gap: f64, threshold: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("steady state is not unique (singular values {smallest:e}, {second:e})")]
    NonUniqueSteadyState { smallest: f64, second: f64 },

    #[error("invalid steady state: {0}")]
    InvalidSteadyState(String),

    #[error("diagonal entry {index} has imaginary part {imag:e}")]
    ComplexDiagonal { index: usize, imag: f64 },

    #[error("trace-distance bound undefined: alpha = {0}")]
    UndefinedBound(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("conic solver failure: {0}")]
    Solver(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("candidate dump: {0}")]
    Dump(String),

    #[error("config no longer reproduces the dumped point:\n  {}", .0.join("\n  "))]
    HashMismatch(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
