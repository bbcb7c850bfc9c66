//! Finite-blocklength toolkit for secure list decoding over noisy channels and
//! its conversion to bit-string commitment.
//!
//! All information quantities are in bits; every logarithm is base 2.

pub mod channel;
pub mod commitment;
pub mod info;
pub mod region;
pub mod scores;
pub mod slc;

pub(crate) mod numeric;

pub use channel::{Channel, GridSpec, InputDistribution, Output, ProductChannel};

/// Errors surfaced by constructors and evaluators.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("channel row {input} has mass {mass} on the declared output space; grid too narrow or matrix not stochastic")]
    Normalization { input: usize, mass: f64 },
    #[error("requested value is infeasible: {0}")]
    Infeasible(String),
    #[error("exact evaluation needs {needed} states but the budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("expurgation left {survivors} codewords; at least 2 are required")]
    ExpurgationCollapse { survivors: usize },
    #[error("operation requires a {expected} channel")]
    WrongChannelKind { expected: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
