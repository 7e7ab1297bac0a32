use thiserror::Error;

use crate::model::ValidationError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("fixed-point iteration did not converge in {steps} steps (residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },
    #[error("revenue system is numerically singular")]
    SingularSystem,
    #[error("infeasible pool sizes: {0}")]
    InfeasibleSizes(String),
    #[error("negative discriminant {0:e} in closed-form equilibrium")]
    NegativeDiscriminant(f64),
    #[error("closed form has a vanishing denominator")]
    DegenerateDenominator,
    #[error("pool index {index} out of range for {pools} pools")]
    PoolIndex { index: usize, pools: usize },
    #[error("invalid simulation config: {0}")]
    SimConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
