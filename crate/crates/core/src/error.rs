//! Error type shared by every module.

use alloc::string::String;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Cholesky failed even after the maximum jitter escalation.
    #[error("matrix is not positive definite (pivot {pivot}, jitter {jitter:e})")]
    NotPositiveDefinite {
        /// Row at which the factorization broke down.
        pivot: usize,
        /// Last jitter tried.
        jitter: f64,
    },
    /// A sample was offered to a store keyed by a different arm.
    #[error("context for arm {found} given to a store for arm {expected}")]
    ArmMismatch {
        /// Arm the store holds.
        expected: u32,
        /// Arm found on the context.
        found: u32,
    },
    /// Negative, infinite or NaN reward.
    #[error("invalid reward {0}")]
    InvalidReward(f64),
    /// Arm selection with no base station in range.
    #[error("empty candidate set")]
    EmptyCandidates,
    /// Brute-force enumeration refused an instance above its guard.
    #[error("instance too large for enumeration: {vehicles} vehicles x {stations} stations")]
    InstanceTooLarge {
        /// Vehicles in the instance.
        vehicles: usize,
        /// Base stations in the instance.
        stations: usize,
    },
    /// A configuration field failed validation.
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig {
        /// Dotted field name.
        field: &'static str,
        /// What is wrong with it.
        reason: String,
    },
}

/// Shorthand result type.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
