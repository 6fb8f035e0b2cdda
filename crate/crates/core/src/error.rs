use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates its documented bound.
    #[error("{name} must be {requirement}")]
    InvalidParameter {
        name: &'static str,
        requirement: String,
    },

    #[error("computation load r = {r} is outside [1, {max}]")]
    LoadOutOfRange { r: String, max: usize },

    #[error("{what}: {numerator} is not divisible by {denominator}")]
    NotDivisible {
        what: &'static str,
        numerator: i64,
        denominator: i64,
    },

    #[error("enumeration needs {candidates} candidates, budget is {budget}")]
    BudgetExceeded { candidates: u128, budget: u128 },

    #[error("symbol extension u_s = {u_s} exceeds the cap of {cap}")]
    ExtensionTooLarge { u_s: u128, cap: usize },

    /// The requested construction collapses (no interference to align, etc).
    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, requirement: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            requirement: requirement.into(),
        }
    }
}
