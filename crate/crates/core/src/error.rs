use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spectral measure is degenerate: support lies in a proper subspace (eigenvalue ratio {ratio:.3e})")]
    DegenerateMeasure { ratio: f64 },
    #[error("atom direction has norm {norm}, outside the normalization tolerance")]
    NonUnitDirection { norm: f64 },
    #[error("negative spectral weight {0}")]
    NegativeWeight(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("unstable fit (r² = {r_squared:.4}): {detail}")]
    FitUnstable { r_squared: f64, detail: String },
    #[error("characteristic exponent nearly vanishes on the sphere (min {min:.3e}, max {max:.3e})")]
    NondegeneracyViolated { min: f64, max: f64 },
    #[error("grid too coarse: exp(-tΦ) at the Nyquist frequency is {tail:.3e}")]
    GridTooCoarse { tail: f64 },
    #[error("the potential kernel is singular at the origin")]
    OriginSingularity,
    #[error("evaluation point within {distance:.3e} of the measure support")]
    SupportHit { distance: f64 },
    #[error("small-jump second moment {moment:.3e} exceeds the bias budget {budget:.3e}")]
    BiasBudgetExceeded { moment: f64, budget: f64 },
    #[error("path did not exit after {steps} steps")]
    StepLimitExceeded { steps: u64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
