use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum JsdmError {
    /// Invalid construction parameters (covariance spec, profile, distribution).
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A numerical result violated an internal consistency requirement.
    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    /// Selected effective channel matrix is (numerically) rank deficient.
    /// Carries the row indices (positions within the selection) that
    /// triggered the failure so the caller may drop a user.
    #[error("rank-deficient selection, offending rows {rows:?} (cond est {cond:.3e})")]
    RankDeficient { rows: Vec<usize>, cond: f64 },

    /// Power allocation cannot proceed (e.g. all-zero gains).
    #[error("power allocation error: {0}")]
    PowerAllocation(String),

    /// A parameter is outside the validity region of an analytical bound.
    #[error("bound not valid: {0}")]
    BoundInvalid(String),

    /// Scenario configuration problem.
    #[error("config error: {0}")]
    Config(String),

    /// Block-diagonalization residual check failed without a waiver.
    #[error("approximate-BD check failed: worst residual {residual:.3e} > tol {tol:.3e} (group {group})")]
    BdCheckFailed { group: usize, residual: f64, tol: f64 },

    /// Round-robin interval budget exceeded (indicates a bug).
    #[error("round-robin did not terminate within {budget} intervals")]
    RrBudgetExceeded { budget: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, JsdmError>;
