use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no positive initial rate gives total demand {total} over {horizon} periods with non-negative rates")]
    NonNormalizable { horizon: usize, total: f64 },

    #[error("time {t} lies outside the horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: usize },

    #[error("grid point (k = {k}, x = {x}) is outside the kernel table (T = {horizon}, x_max = {x_max})")]
    OutOfGrid {
        k: usize,
        x: usize,
        horizon: usize,
        x_max: usize,
    },

    #[error("optimal order-up-to level reached the inventory cap {x_max} at period {t}; raise x_max")]
    CapSaturated { t: usize, x_max: usize },

    #[error("invalid model specification: {0}")]
    BudgetMisuse(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("no inventory level up to {x_max} satisfies the first order condition")]
    NotFound { x_max: usize },

    #[error("policy incompatible with request: {0}")]
    PolicyIncompatible(String),

    #[error("policy has no action for state (t = {t}, x = {x}, z = {z})")]
    UnreachableState { t: usize, x: usize, z: usize },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::CapSaturated { .. } | Error::NotFound { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
