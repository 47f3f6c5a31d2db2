use crate::grid::GridKind;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("alpha must lie in (0, 3), got {value}")]
    AlphaOutOfRange { value: f64 },
    #[error("grid needs at least 16 nodes, got {requested}")]
    GridTooSmall { requested: usize },
    #[error("panel grading ratio must lie in (0, 1), got {value}")]
    InvalidGrading { value: f64 },
    #[error("whole-space map scale must be positive and finite, got {value}")]
    InvalidMapScale { value: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("operation requires a {expected} grid")]
    WrongDomain { expected: GridKind },
    #[error(
        "grid cannot resolve concentration lambda={lambda:.3e}: node spacing {spacing:.3e} near the origin exceeds {required:.3e}"
    )]
    Resolution {
        lambda: f64,
        spacing: f64,
        required: f64,
    },
    #[error("field value at node {index} (r={radius:.6e}) is not finite")]
    NonFiniteField { index: usize, radius: f64 },
    #[error("field tagged Dirichlet has boundary value {value:.3e}")]
    BoundaryViolation { value: f64 },
    #[error("operator -Delta + a is not coercive: lambda_1 = {lambda1:.6e} <= 0")]
    CoercivityFailure { lambda1: f64 },
    #[error("bracket [{lo:.6e}, {hi:.6e}] does not straddle a sign change")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("minimizer concentrates (lambda_hat={lambda_hat:.3e}); no least-energy solution exists")]
    NotAchieved { lambda_hat: f64 },
    #[error("potential is not critical: |phi_a(0)| = {robin:.3e} exceeds {gate:.1e}")]
    NotCritical { robin: f64, gate: f64 },
    #[error("epsilon ladder must be strictly decreasing and positive")]
    BadEpsilonLadder,
    #[error("need at least {needed} achieved sweep points, got {got}")]
    InsufficientSweep { needed: usize, got: usize },
    #[error("radial profile needs >= 2 samples with strictly increasing radii spanning [0, 1]")]
    BadProfile,
    #[error("tolerance must be positive and finite, got {value}")]
    BadTolerance { value: f64 },
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI error object.
    pub fn code(&self) -> &'static str {
        match self {
            Error::AlphaOutOfRange { .. } => "alpha-out-of-range",
            Error::GridTooSmall { .. } => "grid-too-small",
            Error::InvalidGrading { .. } => "invalid-grading",
            Error::InvalidMapScale { .. } => "invalid-map-scale",
            Error::GridMismatch => "grid-mismatch",
            Error::WrongDomain { .. } => "wrong-domain",
            Error::Resolution { .. } => "grid-resolution",
            Error::NonFiniteField { .. } => "non-finite-field",
            Error::BoundaryViolation { .. } => "boundary-violation",
            Error::CoercivityFailure { .. } => "coercivity-failure",
            Error::NoSignChange { .. } => "no-sign-change",
            Error::NonConvergence { .. } => "non-convergence",
            Error::NotAchieved { .. } => "not-achieved",
            Error::NotCritical { .. } => "not-critical",
            Error::BadEpsilonLadder => "bad-epsilon-ladder",
            Error::InsufficientSweep { .. } => "insufficient-sweep",
            Error::BadProfile => "bad-profile",
            Error::BadTolerance { .. } => "bad-tolerance",
        }
    }

    /// True for input-validation failures (CLI exit 2), false for numerical
    /// failures discovered mid-computation (CLI exit 3).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::AlphaOutOfRange { .. }
                | Error::GridTooSmall { .. }
                | Error::InvalidGrading { .. }
                | Error::InvalidMapScale { .. }
                | Error::GridMismatch
                | Error::WrongDomain { .. }
                | Error::BadEpsilonLadder
                | Error::BadProfile
                | Error::BadTolerance { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
