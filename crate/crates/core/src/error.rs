use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian: max |M - M^H| entry is {defect:e}")]
    NotHermitian { defect: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is singular (zero pivot in column {column})")]
    Singular { column: usize },
    #[error("matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("channel matrix is singular: HH^H has eigenvalue {eigenvalue:e}")]
    SingularChannel { eigenvalue: f64 },
    #[error("could not calibrate section gain for target sigma_mdg {target_db} dB: {reason}")]
    Calibration { target_db: f64, reason: &'static str },
    #[error("channel is not power-normalized: |H|_F^2 = {frobenius_sqr}, expected {expected}")]
    UnnormalizedChannel { frobenius_sqr: f64, expected: f64 },
    #[error("reference stream has zero power")]
    ZeroPowerReference,
    #[error("too few symbols: {found} < {minimum}")]
    TooFewSymbols { found: usize, minimum: usize },
    #[error("feature input {index} is not positive ({value})")]
    NonPositiveFeature { index: usize, value: f64 },
    #[error("feature {index} has zero variance in the training split")]
    DegenerateFeature { index: usize },
    #[error("samples are already standardized")]
    AlreadyStandardized,
    #[error("samples are not standardized")]
    NotStandardized,
    #[error("need at least {minimum} samples, got {found}")]
    TooFewSamples { found: usize, minimum: usize },
    #[error("training diverged at epoch {epoch}: loss {loss:e} vs initial {initial:e}")]
    Diverged { epoch: usize, loss: f64, initial: f64 },
    #[error("model estimates {found}, expected {expected}")]
    TargetMismatch { expected: &'static str, found: &'static str },
    #[error("grid needs at least one cell")]
    EmptyGrid,
}
