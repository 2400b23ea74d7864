use thiserror::Error;

/// Errors produced by the rydlab core library.
///
/// Variants are grouped by how a front end should treat them:
/// invalid inputs, numerical failures, and resolution/insufficient-data
/// conditions (the CLI maps these groups to distinct exit codes).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("index n={0} outside tabulated range")]
    OutOfTable(i64),

    #[error("degenerate spectrum: E'(center) vanishes at {center}")]
    DegenerateSpectrum { center: f64 },

    #[error("ratio {0} exceeds the commensurability bound 1/8")]
    RatioExceedsBound(String),

    #[error("packet window contains no valid states")]
    EmptyWindow,

    #[error("invalid packet center: {0}")]
    InvalidCenter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time scale {0} is undefined for this spectrum")]
    UndefinedScale(&'static str),

    #[error("trace too short: {0}")]
    TraceTooShort(String),

    #[error("parity violation: state n={n}, k={k} (k must be even iff n is odd)")]
    ParityViolation { n: i64, k: i64 },

    #[error("evaluation time {t} does not match the expansion's fractional time {expected}")]
    TimeMismatch { t: f64, expected: f64 },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("moment of order {order} diverges for alpha={alpha}")]
    DivergentMoment { order: i32, alpha: f64 },

    #[error("no root in bracket: scanned u in [{lo:.6e}, {hi:.6e}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("projection window too narrow: captured norm {captured:.6} < {required}")]
    WindowTooNarrow { captured: f64, required: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("quadrature failed to converge (abs error {err:.3e} > tol {tol:.3e})")]
    QuadratureFailed { err: f64, tol: f64 },
}

/// Error class used by front ends to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad inputs or configuration.
    Config,
    /// Numerical failure during computation.
    Numeric,
    /// Data or grid resolution insufficient for the request.
    Resolution,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidIndex(_) | OutOfTable(_) | RatioExceedsBound(_) | EmptyWindow
            | InvalidCenter(_) | InvalidParameter(_) | ParityViolation { .. }
            | TimeMismatch { .. } | UndefinedScale(_) => ErrorClass::Config,
            DegenerateSpectrum { .. } | DivergentMoment { .. } | NoRootInBracket { .. }
            | QuadratureFailed { .. } => ErrorClass::Numeric,
            TraceTooShort(_) | InsufficientResolution(_) | WindowTooNarrow { .. }
            | GridTooCoarse(_) => ErrorClass::Resolution,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
