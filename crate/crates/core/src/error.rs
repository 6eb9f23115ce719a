use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("parabolic channel: |E - a_{index}| = {value} is within {tol} of 2")]
    ParabolicChannel { index: usize, value: f64, tol: f64 },
    #[error("no elliptic channel at this energy")]
    NoEllipticChannel,
    #[error("integer overflow while building band-edge matrices (d = {0})")]
    Overflow(usize),
    #[error("starting block D0 is singular (condition {0:.3e})")]
    SingularStart(f64),
    #[error("singular pivot at step {step} (condition {cond:.3e})")]
    SingularPivot { step: u64, cond: f64 },
    #[error("flag rank collapse at step {step} (relative residual {residual:.3e})")]
    RankCollapse { step: u64, residual: f64 },
    #[error("rank deficient basis")]
    RankDeficient,
    #[error("invalid covariance: smallest eigenvalue {0:.3e} below floor")]
    InvalidCovariance(f64),
    #[error("size cap exceeded: {size} > {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("too few points ({0}) for gap statistics")]
    TooFewPoints(usize),
    #[error("non-real spectrum: imaginary part {0:.3e}")]
    NonRealSpectrum(f64),
    #[error("validation: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
