use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension {0} is not supported")]
    UnsupportedDimension(usize),

    #[error("grid spacing {h:.3e} exceeds {max_h:.3e} required for {points_per_wavelength} points per wavelength at hbar = {hbar:.3e}")]
    ResolutionTooCoarse {
        h: f64,
        max_h: f64,
        hbar: f64,
        points_per_wavelength: f64,
    },

    #[error("box wall potential {wall_min:.4} is below mu + margin = {required:.4}")]
    BoxTooSmall { wall_min: f64, required: f64 },

    #[error("droplet {{V < mu}} is empty (min V = {min_v}, mu = {mu})")]
    EmptyDroplet { min_v: f64, mu: f64 },

    #[error("eigenvalue iteration did not converge at index {index}")]
    NoConvergence { index: usize },

    #[error("dense eigensolver limited to {max} rows, got {size}")]
    MatrixTooLarge { size: usize, max: usize },

    #[error("retained spectrum ends at {retained:.6} which does not cover {required:.6}")]
    CutoffTooLow { retained: f64, required: f64 },

    #[error("no eigenvalue lies below mu = {mu}")]
    EmptyOccupation { mu: f64 },

    #[error("restricted eigenvalue {value:.3e} lies outside [0, 1]")]
    SpectrumOutOfRange { value: f64 },

    #[error("matrix is not an orthogonal projection (defect {defect:.3e})")]
    NotAProjection { defect: f64 },

    #[error("all restricted eigenvalues are 0 or 1; entropy = {entropy}")]
    DegenerateSpectrum { entropy: f64 },

    #[error("Poisson-binomial law limited to {max} parameters, got {count}")]
    TooManyParameters { count: usize, max: usize },

    #[error("counting law has zero variance")]
    ZeroVariance,

    #[error("Fredholm determinant is not positive (sign {sign})")]
    SingularDeterminant { sign: f64 },

    #[error("sampler breakdown at step {step}: residual mass {mass:.9} expected {expected}")]
    NumericalBreakdown {
        step: usize,
        mass: f64,
        expected: usize,
    },

    #[error("region boundary leaves the bulk: max V on boundary {max_v:.6} >= mu - 1e-6 = {limit:.6}")]
    RegionNotInBulk { max_v: f64, limit: f64 },

    #[error("radius {r} is outside the bulk: v(r) = {v_of_r} >= mu = {mu}")]
    OutsideBulk { r: f64, v_of_r: f64, mu: f64 },

    #[error("integrand is not integrable: {0}")]
    NonIntegrable(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("asymptotic form requires |xi| >= {min}, got {xi}")]
    ArgumentTooSmall { xi: f64, min: f64 },

    #[error("phase Hessian is degenerate (|det H| = {det:.3e})")]
    DegeneratePhase { det: f64 },

    #[error("oscillatory quadrature needs {needed} samples, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("least-squares fit needs at least {needed} points with distinct hbar, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
