//! Algebraic Lyapunov equations and block-structured Lyapunov inequalities
//! `A P + P Aᵀ + B Bᵀ ⪯ 0`, `Q A + Aᵀ Q + Cᵀ C ⪯ 0`.

pub mod barrier;
mod lyapunov;
mod metzler;
mod structured;

use std::fmt;

use nalgebra::Complex;
use thiserror::Error;

pub use barrier::BarrierOptions;
pub use lyapunov::{lyapunov_residual, solve_lyapunov_eq};
pub use metzler::{is_metzler, metzler_diagonal_gramian, metzler_violations, MetzlerViolation};
pub use structured::{
    inequality_residual, solve_structured_gramians, solve_structured_lmi, BlockMode, GramianMethod,
    GramianOptions, GramianStructure, PartitionSpec, StructuredGramians,
};

/// Which of the two inequalities a result or error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramianKind {
    P,
    Q,
}

impl fmt::Display for GramianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GramianKind::P => "P",
            GramianKind::Q => "Q",
        })
    }
}

fn describe_violations(v: &[MetzlerViolation]) -> String {
    let shown: Vec<String> = v.iter().take(5).map(|e| format!("({},{})={:e}", e.row + 1, e.col + 1, e.value)).collect();
    let more = if v.len() > 5 { format!(" and {} more", v.len() - 5) } else { String::new() };
    format!("{}{more}", shown.join(", "))
}

#[derive(Debug, Clone, Error)]
pub enum GramianError {
    #[error("Lyapunov equation is ill-posed: eigenvalues {l1} and {l2} sum to {sum:e}")]
    IllPosed { l1: Complex<f64>, l2: Complex<f64>, sum: f64 },
    #[error("drift matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },
    #[error("matrix is not Metzler: negative off-diagonal entries {}", describe_violations(.violations))]
    NotMetzler { violations: Vec<MetzlerViolation> },
    #[error("structured {which} is infeasible: best phase-1 slack {slack:e} > 0")]
    Infeasible { which: GramianKind, slack: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid partition: {0}")]
    Partition(String),
}
