//! Error type shared by all modules.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by validation and numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A constructor argument failed validation.
    #[error("invalid {field}: {reason}")]
    InvalidParameter {
        /// Name of the offending field or argument.
        field: &'static str,
        /// Human-readable description of the violated constraint.
        reason: String,
    },

    /// A probability mass query outside the distribution's support.
    #[error("x={x} outside support [{lo}, {hi}]")]
    OutOfSupport {
        /// Queried outcome.
        x: i64,
        /// Smallest outcome with positive probability.
        lo: u64,
        /// Largest outcome with positive probability.
        hi: u64,
    },

    /// A mathematically infeasible request (sample larger than population,
    /// allocation outside its bounds, and similar).
    #[error("domain error: {0}")]
    Domain(String),

    /// The budget cannot fund the requested design.
    #[error("budget error: {0}")]
    Budget(String),

    /// The closed-form allocation branch only applies below `w1_star`.
    #[error("closed-form branch requires w1 < {w1_star}, got w1 = {w1}; use the numerical solver")]
    ClosedFormBranch {
        /// Stratum-1 weight of the offending design.
        w1: f64,
        /// Branch threshold.
        w1_star: f64,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
