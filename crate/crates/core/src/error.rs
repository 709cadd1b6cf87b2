use num_complex::Complex64;
use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter {name} is not finite")]
    NonFinite { name: &'static str },
    #[error("parameter {name} = {value} must be positive")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("parameter {name} = {value} has the wrong sign")]
    WrongSign { name: &'static str, value: f64 },
    #[error("coupling S = {s} must be below min(m, J) = {limit}")]
    CouplingTooStrong { s: f64, limit: f64 },
    #[error("balanced piezo coupling requires CI = -CD (CI = {ci}, CD = {cd})")]
    BalancedPiezoViolated { ci: f64, cd: f64 },
    #[error("branch-1 condition k2 > sqrt(GJ) violated (k2 = {k2}, sqrt(GJ) = {sqrt_gj})")]
    Branch1ConditionViolated { k2: f64, sqrt_gj: f64 },
    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),
    #[error("lambda must be nonzero")]
    ZeroLambda,
    #[error("asymptotic root expansion needs |lambda| >= {floor}, got {modulus}")]
    BelowAsymptoticFloor { modulus: f64, floor: f64 },
    #[error("matrix A1 is numerically singular at lambda = {0}")]
    SingularA1(Complex64),
    #[error("matrix A3 is numerically singular at lambda = {0}")]
    SingularA3(Complex64),
    #[error("lambda = {lambda} lies within {radius} of the circuit pole {pole}")]
    PoleProximity {
        lambda: Complex64,
        pole: Complex64,
        radius: f64,
    },
    #[error("|g2(lambda_1,{n})| = {magnitude:e} is too small for the branch-1 correction")]
    G2TooSmall { n: u32, magnitude: f64 },
    #[error("Newton iteration for w_2,{n} diverged (residual {residual:e})")]
    NewtonDivergence { n: u32, residual: f64 },
    #[error("zero of the evaluator on the contour boundary")]
    BoundaryZero,
    #[error("phase sampling exceeded the budget of {budget} points on one edge")]
    PhaseUndersampled { budget: usize },
    #[error("refinement did not converge from {seed} (best residual {residual:e})")]
    NotConverged { seed: Complex64, residual: f64 },
    #[error("could not isolate the root near {lambda} in a certified box")]
    CertificationFailed { lambda: Complex64 },
    #[error("no eigenvalue survived the two-grid filter")]
    ResolutionInsufficient,
    #[error("grid too coarse: quadrature error estimate {estimate:e}")]
    GridTooCoarse { estimate: f64 },
    #[error("state functions live on different grids")]
    GridMismatch,
    #[error("only {pairs} eigenvalue pairs matched (need at least {required})")]
    MatchingFailed { pairs: usize, required: usize },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parameter file line {line}: {message}")]
    ParameterFile { line: usize, message: String },
    #[error("parameter file is missing key `{0}`")]
    MissingKey(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
