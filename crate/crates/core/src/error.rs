use thiserror::Error;

/// Errors raised by the laboratory. Variants map onto the CLI exit-code
/// classes through [`MetriqError::class`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetriqError {
    #[error("invalid dimension {dim}: at least {min} Fock levels are required")]
    InvalidDimension { dim: usize, min: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("label ({p}, {q}) lies outside the admissible radius {radius}")]
    LabelRadius { p: f64, q: f64, radius: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("symbol parse error at byte {pos}: {msg}")]
    SymbolParse { pos: usize, msg: String },

    #[error("singular coordinate map (det = {det})")]
    SingularMap { det: f64 },

    #[error("coordinate map is not symplectic (det = {det})")]
    NotSymplectic { det: f64 },

    #[error("integration diverged at t = {last_finite_time}")]
    Divergence { last_finite_time: f64 },

    #[error(
        "feasibility guard: nu*T/(2*hbar) = {ratio:.3} exceeds {limit}; the prefactor e^(nu T/2 hbar) \
         would swamp the signal at any desk-scale sample count"
    )]
    Feasibility { ratio: f64, limit: f64 },

    #[error("non-finite sample at index {index} (seed {seed})")]
    PoisonedSample { seed: u64, index: u64 },

    #[error("truncation sensitivity: result moved by {delta:e} between dim {dim_lo} and {dim_hi}")]
    Truncation { delta: f64, dim_lo: usize, dim_hi: usize },

    #[error("path dump: {0}")]
    Dump(String),
}

/// Coarse error class used for exit codes and machine-readable reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Feasibility,
    Numerical,
}

impl MetriqError {
    pub fn class(&self) -> ErrorClass {
        use MetriqError::*;
        match self {
            InvalidDimension { .. }
            | InvalidParameter { .. }
            | ContractViolation(_)
            | LabelRadius { .. }
            | Capacity(_)
            | SymbolParse { .. }
            | SingularMap { .. }
            | NotSymplectic { .. }
            | Dump(_) => ErrorClass::Validation,
            Feasibility { .. } => ErrorClass::Feasibility,
            Divergence { .. } | PoisonedSample { .. } | Truncation { .. } => ErrorClass::Numerical,
        }
    }

    pub fn kind(&self) -> &'static str {
        use MetriqError::*;
        match self {
            InvalidDimension { .. } => "invalid-dimension",
            InvalidParameter { .. } => "invalid-parameter",
            ContractViolation(_) => "contract-violation",
            LabelRadius { .. } => "label-radius",
            Capacity(_) => "capacity",
            SymbolParse { .. } => "symbol-parse",
            SingularMap { .. } => "singular-map",
            NotSymplectic { .. } => "not-symplectic",
            Divergence { .. } => "divergence",
            Feasibility { .. } => "feasibility",
            PoisonedSample { .. } => "poisoned-sample",
            Truncation { .. } => "truncation",
            Dump(_) => "dump",
        }
    }
}

pub type Result<T> = std::result::Result<T, MetriqError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> MetriqError {
    MetriqError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
