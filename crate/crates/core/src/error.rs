use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcpError {
    #[error("threshold pair invalid: lambda={lambda}, gamma={gamma} (need 0<lambda<1, 0<gamma<1, lambda*(1+gamma)<1)")]
    InvalidThreshold { lambda: f64, gamma: f64 },

    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("eps must lie in (0, 1/2), got {0}")]
    InvalidEps(f64),

    #[error("argument {0} outside [-1, 1]")]
    OutOfRange(f64),

    #[error("optimal quadratic filter is undefined at lambda = 1/2; use the degree-1 filter")]
    LambdaHalf,

    #[error("reflection is only defined for polynomial filters")]
    NotAPolynomial,

    #[error("no admissible (a, c) pair on the scan grid for lambda={lambda}, gamma={gamma}")]
    EmptyFeasible { lambda: f64, gamma: f64 },

    #[error("power iteration did not converge within {iterations} iterations")]
    NonConvergent { iterations: usize },

    #[error("operator maps the initial probe to zero")]
    ZeroOperator,

    #[error("dimension mismatch: operator is {expected}, vector is {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not certified to have unit spectral norm; run power_normalize first")]
    NotNormalized,

    #[error("degree must be at least {min}, got {found}")]
    InvalidDegree { min: usize, found: usize },

    #[error("conjugate gradient hit the iteration cap ({max_iter}) in {failed} ridge solve(s)")]
    MaxIterExceeded { max_iter: usize, failed: usize },

    #[error("reference projection has zero norm; use absolute error")]
    ZeroReference,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl PcpError {
    /// True for malformed input (files, flags, parameter ranges); false for numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            PcpError::Parse { .. }
                | PcpError::Io(_)
                | PcpError::InvalidConfig(_)
                | PcpError::InvalidThreshold { .. }
                | PcpError::InvalidAlpha(_)
                | PcpError::InvalidEps(_)
                | PcpError::InvalidDegree { .. }
                | PcpError::DimensionMismatch { .. }
                | PcpError::LambdaHalf
        )
    }
}

impl From<std::io::Error> for PcpError {
    fn from(e: std::io::Error) -> Self {
        PcpError::Io(e.to_string())
    }
}

impl From<csv::Error> for PcpError {
    fn from(e: csv::Error) -> Self {
        PcpError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PcpError>;
