//! Structured projection-based model order reduction of the Linear Noise
//! Approximation of chemical reaction networks.
//!
//! The pipeline runs [`netparse`] → [`lna`] → [`gramians`] → [`reduction`]
//! → [`metrics`]; [`cli`] drives it from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod gramians;
pub mod linalg;
pub mod lna;
pub mod metrics;
pub mod models;
pub mod netparse;
pub mod reduction;

use thiserror::Error;

use gramians::GramianError;
use lna::{LnaError, OdeError};
use metrics::MetricsError;
use netparse::{NetworkError, ParseError, RateError};
use reduction::ReductionError;

/// Any error the library can produce.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Lna(#[from] LnaError),
    #[error(transparent)]
    Gramian(#[from] GramianError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Input(String),
}

impl Error {
    /// True for failures of the numerics (infeasibility, divergence,
    /// singular systems) as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Parse(_) | Error::Network(_) | Error::Io { .. } | Error::Input(_) => false,
            Error::Rate(_) => true,
            Error::Lna(e) => lna_numerical(e),
            Error::Gramian(e) => gramian_numerical(e),
            Error::Reduction(e) => reduction_numerical(e),
            Error::Metrics(e) => match e {
                MetricsError::Dimension(_) => false,
                MetricsError::Lna(e) => lna_numerical(e),
                MetricsError::Reduction(e) => reduction_numerical(e),
            },
        }
    }
}

fn ode_numerical(e: &OdeError) -> bool {
    !matches!(e, OdeError::InvalidInput(_))
}

fn lna_numerical(e: &LnaError) -> bool {
    match e {
        LnaError::InvalidInput(_) | LnaError::Selection(_) | LnaError::Network(_) => false,
        LnaError::Ode(e) => ode_numerical(e),
        _ => true,
    }
}

fn gramian_numerical(e: &GramianError) -> bool {
    !matches!(e, GramianError::Dimension(_) | GramianError::Partition(_))
}

fn reduction_numerical(e: &ReductionError) -> bool {
    match e {
        ReductionError::Lna(e) => lna_numerical(e),
        ReductionError::Gramian(e) => gramian_numerical(e),
        ReductionError::Ode(e) => ode_numerical(e),
        ReductionError::Network(_)
        | ReductionError::InvalidTruncation(_)
        | ReductionError::Selection(_)
        | ReductionError::Dimension(_)
        | ReductionError::Config(_) => false,
        _ => true,
    }
}
