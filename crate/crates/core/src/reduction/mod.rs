//! Structured balancing, projection and simulation of reduced models, plus
//! the time-scale-separation baseline.

mod balance;
mod config;
mod model;
mod pipeline;
mod projectors;

use thiserror::Error;

use crate::gramians::GramianError;
use crate::lna::{LnaError, OdeError};
use crate::netparse::{NetworkError, RateError};

pub use balance::{balance_block, truncation_order, BalancedBlock, ThresholdRule, TruncationOrder};
pub use config::{parse_reduction_config, MethodKind, ReductionConfig, ResolvedConfig};
pub use model::{simulate_reduced, ReducedLinearSystem, ReducedModel, ReducedSimulation, ReductionMethod};
pub use pipeline::{
    averaged_fluctuation_system, reduce_averaging, reduce_structured, GroupTruncation, LumpedGroup,
    StructuredOptions, TransformMode,
};
pub use projectors::{build_projectors, ProjectorSet};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Lna(#[from] LnaError),
    #[error(transparent)]
    Gramian(#[from] GramianError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("{matrix} is not positive definite (leading minor {} fails)", .minor + 1)]
    NotPositiveDefinite { matrix: &'static str, minor: usize },
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("invalid species selection: {0}")]
    Selection(String),
    #[error("algebraic constraint Jacobian is singular (condition number {cond:e}); the reduced DAE is not index 1")]
    SingularAlgebraic { cond: f64 },
    #[error("algebraic constraint not solved (residual {residual:e})")]
    NewtonFailed { residual: f64 },
    #[error("fast block of the drift matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    FastNotHurwitz { abscissa: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("reduction config: {0}")]
    Config(String),
}
