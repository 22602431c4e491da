//! Linear Noise Approximation of a reaction network.
//!
//! The macroscopic concentrations follow `ẋ = S f(x)`; fluctuations obey the
//! linear SDE `η̇ = J(x) η + Ω^{-1/2} S F(x) Γ` with `F = diag(√f)`, whose
//! covariance solves `Ẋ = J X + X Jᵀ + Ω⁻¹ S F² Sᵀ`.

mod covariance;
mod linearize;
pub mod ode;
mod sde;
mod steady;
mod trajectory;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::netparse::{KineticModel, NetworkError, RateError};

pub(crate) use covariance::merge_grid;
pub use covariance::{integrate_lyapunov_cov, integrate_lyapunov_ode, simulate_lna, CovMode};
pub use linearize::{linearize_at, linearize_with_order, LinearFluctuationSystem};
pub use ode::{integrate_ode, OdeError, OdeOptions, Tolerances};
pub use sde::{
    fluctuation_ensemble, simulate_fluctuation_paths, EnsembleSummary, FluctuationDynamics,
    PathOptions,
};
pub use steady::{steady_state, SteadyState, SteadyStateOptions};
pub use trajectory::{CovTrajectory, Interpolator, Trajectory};

#[derive(Debug, Error)]
pub enum LnaError {
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("rate of reaction `{reaction}` is negative ({value}); F = diag(sqrt(f)) is undefined")]
    NegativeRate { reaction: String, value: f64 },
    #[error("drift matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },
    #[error("steady state not found: residual {residual:e} after {iterations} Newton iterations and fallback integration to t = {t_end}")]
    NoSteadyState { residual: f64, iterations: usize, t_end: f64 },
    #[error("steady state has negative concentration of `{species}` ({value:e})")]
    NegativeSteadyState { species: String, value: f64 },
    #[error("invalid species selection: {0}")]
    Selection(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Macroscopic vector field `S f(x)`.
pub fn macroscopic_rhs<M: KineticModel + ?Sized>(model: &M, x: &DVector<f64>) -> Result<DVector<f64>, LnaError> {
    Ok(model.stoichiometry() * model.rates(x)?)
}

/// Drift matrix `J(x) = S ∂f/∂x`.
pub fn jacobian_j<M: KineticModel + ?Sized>(model: &M, x: &DVector<f64>) -> Result<DMatrix<f64>, LnaError> {
    Ok(model.stoichiometry() * model.rate_jacobian_at(x)?)
}

fn check_nonnegative<M: KineticModel + ?Sized>(model: &M, f: &DVector<f64>) -> Result<(), LnaError> {
    for (i, v) in f.iter().enumerate() {
        if *v < 0.0 {
            return Err(LnaError::NegativeRate { reaction: model.reaction_name(i).to_string(), value: *v });
        }
    }
    Ok(())
}

/// `F(x) = diag(√f(x))`, reactions × reactions.
pub fn noise_f<M: KineticModel + ?Sized>(model: &M, x: &DVector<f64>) -> Result<DMatrix<f64>, LnaError> {
    let f = model.rates(x)?;
    check_nonnegative(model, &f)?;
    Ok(DMatrix::from_diagonal(&f.map(f64::sqrt)))
}

/// Noise input `Ω^{-1/2} S F(x)`.
pub fn noise_input<M: KineticModel + ?Sized>(model: &M, x: &DVector<f64>) -> Result<DMatrix<f64>, LnaError> {
    Ok(model.stoichiometry() * noise_f(model, x)? / model.volume().sqrt())
}

/// Diffusion matrix `Ω⁻¹ S F² Sᵀ`.
pub fn diffusion<M: KineticModel + ?Sized>(model: &M, x: &DVector<f64>) -> Result<DMatrix<f64>, LnaError> {
    let f = model.rates(x)?;
    check_nonnegative(model, &f)?;
    let s = model.stoichiometry();
    let sf = DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] * f[j]);
    Ok(sf * s.transpose() / model.volume())
}

/// Integrates the macroscopic rate equations from `x0`, reporting at `times`.
pub fn simulate_macroscopic<M: KineticModel + ?Sized>(
    model: &M,
    x0: &DVector<f64>,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory, LnaError> {
    let t_span = span_of(times)?;
    let tr = integrate_ode(|_, x| macroscopic_rhs(model, x), x0, t_span, times, opts)?;
    Ok(tr.with_labels(model.species_names()))
}

pub(crate) fn span_of(times: &[f64]) -> Result<(f64, f64), LnaError> {
    match (times.first(), times.last()) {
        (Some(&a), Some(&b)) if b > a => Ok((a, b)),
        _ => Err(LnaError::InvalidInput("need at least two increasing output times".into())),
    }
}

/// `n` evenly spaced times covering `[t0, t1]`.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (t1 - t0) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { t1 } else { t0 + h * i as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::toy_network;
    use crate::netparse::parse_network;

    #[test]
    fn toy_rhs_at_zero_is_production_only() {
        let net = toy_network();
        let rhs = macroscopic_rhs(&net, &DVector::zeros(4)).unwrap();
        assert_eq!(rhs.as_slice(), &[3.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn pure_degradation() {
        let net = parse_network("species x = 1\nreaction d: x -> @ x\n").unwrap();
        let x = DVector::from_element(1, 1.0);
        assert_eq!(macroscopic_rhs(&net, &x).unwrap()[0], -1.0);
        assert_eq!(jacobian_j(&net, &x).unwrap()[(0, 0)], -1.0);
    }

    #[test]
    fn noise_matrix_is_sqrt_of_rates() {
        let net = parse_network("species x = 4\nreaction a: -> x @ x\nreaction b: x -> @ x + 5\nreaction c: x -> @ 0 * x\n")
            .unwrap();
        let f = noise_f(&net, net.x0()).unwrap();
        assert_eq!(f[(0, 0)], 2.0);
        assert_eq!(f[(1, 1)], 3.0);
        assert_eq!(f[(2, 2)], 0.0);
        assert_eq!(f[(0, 1)], 0.0);
    }

    #[test]
    fn negative_rate_names_reaction() {
        let net = parse_network("species x = 1\nreaction bad: x -> @ 2 - x\n").unwrap();
        let err = noise_f(&net, &DVector::from_element(1, 3.0)).unwrap_err();
        match err {
            LnaError::NegativeRate { reaction, .. } => assert_eq!(reaction, "bad"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
