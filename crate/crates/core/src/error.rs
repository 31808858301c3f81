use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("signal file {path}: {reason}")]
    SignalFile { path: String, reason: String },

    #[error("upper-bound exceeded: Im(zeta) = {im} is above the representable limit {limit} for T = {half_width}")]
    UpperBoundExceeded { im: f64, limit: f64, half_width: f64 },

    #[error("no discrete spectrum energy budget (E_t - E_c = {0})")]
    NoEnergyBudget(f64),

    #[error("all-zero signal")]
    ZeroSignal,

    #[error("need at least two boundary samples, got {0}")]
    TooFewSamples(usize),

    #[error("jump criterion lost during bisection near {0}")]
    JumpLost(num_complex::Complex64),

    #[error("refinement diverged from {start} (last iterate {last})")]
    Divergence {
        start: num_complex::Complex64,
        last: num_complex::Complex64,
    },

    #[error("degenerate refinement step at {0}: zero denominator")]
    DegenerateStep(num_complex::Complex64),

    #[error("derivative not available from this evaluator")]
    NoDerivative,

    #[error("undersampled contour: {0}")]
    UndersampledContour(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error; distinct per variant and clear of the
    /// codes used for success (0), generic failures (1), usage errors (2) and
    /// incomplete spectra (3).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 10,
            Error::InvalidSignal(_) => 11,
            Error::SignalFile { .. } => 12,
            Error::UpperBoundExceeded { .. } => 13,
            Error::NoEnergyBudget(_) => 14,
            Error::ZeroSignal => 15,
            Error::TooFewSamples(_) => 16,
            Error::JumpLost(_) => 17,
            Error::Divergence { .. } => 18,
            Error::DegenerateStep(_) => 19,
            Error::NoDerivative => 20,
            Error::UndersampledContour(_) => 21,
            Error::Io(_) => 22,
        }
    }
}
