use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown site `{0}`")]
    UnknownSite(String),

    #[error("duplicate site label `{0}`")]
    DuplicateSite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Hilbert space dimension {dim} exceeds the cap {cap} (set XYINEQ_DIM_CAP to raise it)")]
    DimensionCap { dim: usize, cap: usize },

    #[error("unsupported local dimension {0}; expected 2 (spin 1/2) or 3 (spin 1)")]
    UnsupportedLocalDim(usize),

    #[error("unsupported spin value {0}; expected 1/2 or 1")]
    UnsupportedSpin(f64),

    #[error("invalid spin axis {0}; expected 1, 2 or 3")]
    InvalidAxis(u8),

    #[error("operator is not Hermitian (max |M - M^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("coupling on {subset:?} axis {axis} has negative strength {strength}; couplings must be nonnegative (ferromagnetic)")]
    NegativeCoupling {
        subset: Vec<String>,
        axis: u8,
        strength: f64,
    },

    #[error("coupling on axis {axis} is outside the declared axis pair {pair}")]
    AxisOutsidePair { axis: u8, pair: String },

    #[error("coupling subset must be nonempty")]
    EmptyCouplingSubset,

    #[error("duplicate coupling for subset {subset:?} on axis {axis}")]
    DuplicateCoupling { subset: Vec<String>, axis: u8 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ground space is ambiguous: degeneracy tolerance {gap_tol:e} is not small against the first gap {gap:e}")]
    AmbiguousGroundSpace { gap_tol: f64, gap: f64 },

    #[error("value has a non-negligible imaginary part {imag:e} (real part {real:e})")]
    ComplexValue { real: f64, imag: f64 },

    #[error("two evaluation routes disagree: {what} (residual {residual:e})")]
    RouteDisagreement { what: &'static str, residual: f64 },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("|value| = {value:e} exceeds the operator-norm bound {bound:e}")]
    BoundViolated { value: f64, bound: f64 },

    #[error("volume sequence is not strictly nested at step {0}")]
    NotNested(usize),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
