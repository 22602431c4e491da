//! Reaction-network models: the text format, symbolic rates, and linear
//! changes of species coordinates.

mod expr;
mod network;
mod parser;
mod transform;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use expr::{EvalError, Expr, Symbols};
pub use network::{NetworkParts, Reaction, ReactionNetwork, DEFAULT_VOLUME};
pub use parser::parse_network;
pub use transform::{transform_network, TransformedNetwork};

/// Anything with a stoichiometry matrix and evaluable macroscopic rates.
///
/// Both plain networks and networks seen through an invertible species
/// transformation implement this, so the LNA machinery runs on either.
pub trait KineticModel {
    fn species_names(&self) -> Vec<String>;
    fn stoichiometry(&self) -> &DMatrix<f64>;
    fn rates(&self, x: &DVector<f64>) -> Result<DVector<f64>, RateError>;
    /// ∂f/∂x at `x`, reactions × species.
    fn rate_jacobian_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, RateError>;
    fn volume(&self) -> f64;
    fn initial_state(&self) -> DVector<f64>;
    fn reaction_name(&self, i: usize) -> &str;

    fn n_species(&self) -> usize {
        self.stoichiometry().nrows()
    }

    fn n_reactions(&self) -> usize {
        self.stoichiometry().ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("reaction `{reaction}`: {source}")]
    Eval { reaction: String, source: EvalError },
    #[error("state has {found} entries, network has {expected} species")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("network declares no species")]
    Empty,
    #[error("duplicate species `{0}`")]
    DuplicateSpecies(String),
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("duplicate reaction name `{0}`")]
    DuplicateReaction(String),
    #[error("volume must be positive and finite, got {0}")]
    InvalidVolume(f64),
    #[error("initial concentration of `{species}` must be finite and nonnegative, got {value}")]
    InvalidInitial { species: String, value: f64 },
    #[error("reaction `{0}` has zero net stoichiometry")]
    ZeroStoichiometry(String),
    #[error("rate of reaction `{reaction}` is negative at the initial state ({value})")]
    NegativeRate { reaction: String, value: f64 },
    #[error("rate evaluation failed at the initial state: {0}")]
    Rate(#[from] RateError),
    #[error("output list must reference distinct declared species")]
    InvalidOutputs,
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("permutation is not a bijection on species indices")]
    InvalidPermutation,
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transformation matrix must be {expected}x{expected}, got {rows}x{cols}")]
    TransformShape { expected: usize, rows: usize, cols: usize },
    #[error("transformation matrix is numerically singular (condition number {cond:e})")]
    SingularTransform { cond: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: unknown symbol `{name}`")]
    UnknownSymbol { line: usize, col: usize, name: String },
    #[error("line {line}: `{name}` declared twice")]
    Duplicate { line: usize, name: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
}
