use nalgebra::DVector;

use super::ode::{integrate_ode, OdeOptions};
use super::{jacobian_j, macroscopic_rhs, LnaError};
use crate::linalg::spectral_abscissa;
use crate::netparse::KineticModel;

#[derive(Debug, Clone)]
pub struct SteadyStateOptions {
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Residual target relative to `1 + ‖f(x)‖∞`.
    pub rel_tol: f64,
    /// Final time for the integration fallback before giving up.
    pub max_integration_time: f64,
    pub ode: OdeOptions,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        SteadyStateOptions {
            max_iterations: 50,
            max_halvings: 30,
            rel_tol: 1e-10,
            max_integration_time: 1e7,
            ode: OdeOptions::default(),
        }
    }
}

/// Result of [`steady_state`].
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub x: DVector<f64>,
    /// `‖S f(x)‖∞`.
    pub residual: f64,
    /// `‖f(x)‖∞`, the scale the residual is judged against.
    pub rate_scale: f64,
    pub spectral_abscissa: f64,
    pub hurwitz: bool,
    pub newton_iterations: usize,
    pub used_integration: bool,
    pub warnings: Vec<String>,
}

fn residual_of<M: KineticModel + ?Sized>(model: &M, x: &DVector<f64>) -> Result<(f64, f64), LnaError> {
    let f = model.rates(x)?;
    let r = model.stoichiometry() * &f;
    Ok((r.amax(), f.amax()))
}

/// Damped Newton. Returns the final point and whether it converged.
fn newton<M: KineticModel + ?Sized>(
    model: &M,
    x0: &DVector<f64>,
    opts: &SteadyStateOptions,
    iterations: &mut usize,
) -> Result<(DVector<f64>, bool), LnaError> {
    let mut x = x0.clone();
    let mut r = macroscopic_rhs(model, &x)?;
    for _ in 0..opts.max_iterations {
        let (res, scale) = residual_of(model, &x)?;
        if res <= opts.rel_tol * (1.0 + scale) {
            return Ok((x, true));
        }
        *iterations += 1;
        let j = jacobian_j(model, &x)?;
        let dx = match j.clone().lu().solve(&(-&r)) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => match j.svd(true, true).solve(&(-&r), 1e-14) {
                Ok(d) => d,
                Err(_) => return Ok((x, false)),
            },
        };
        let norm0 = r.norm();
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let cand = &x + &dx * lambda;
            if let Ok(rc) = macroscopic_rhs(model, &cand) {
                if rc.norm() < norm0 {
                    x = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Ok((x, false));
        }
    }
    let (res, scale) = residual_of(model, &x)?;
    Ok((x.clone(), res <= opts.rel_tol * (1.0 + scale)))
}

/// Finds `x` with `S f(x) = 0` starting from `guess`.
///
/// Damped Newton first; if that stalls, integrate the rate equations with a
/// doubling horizon until the residual is small and polish with Newton.
/// The drift matrix at the result is checked for stability; a non-Hurwitz
/// result is returned with a warning rather than an error.
pub fn steady_state<M: KineticModel + ?Sized>(
    model: &M,
    guess: &DVector<f64>,
    opts: &SteadyStateOptions,
) -> Result<SteadyState, LnaError> {
    if guess.len() != model.n_species() || guess.iter().any(|v| !v.is_finite()) {
        return Err(LnaError::InvalidInput("steady-state guess must be finite with one entry per species".into()));
    }
    let mut iterations = 0;
    let (mut x, mut converged) = newton(model, guess, opts, &mut iterations)?;
    let mut used_integration = false;
    if !converged {
        used_integration = true;
        let mut current = guess.clone();
        let mut span = 10.0;
        let mut t_end = 0.0;
        while t_end < opts.max_integration_time {
            let tr = integrate_ode(
                |_, x| macroscopic_rhs(model, x),
                &current,
                (t_end, t_end + span),
                &[t_end + span],
                &opts.ode,
            )?;
            t_end += span;
            current = tr.last_state();
            let (res, scale) = residual_of(model, &current)?;
            if res <= 1e-6 * (1.0 + scale) {
                let (polished, ok) = newton(model, &current, opts, &mut iterations)?;
                if ok {
                    x = polished;
                    converged = true;
                    break;
                }
            }
            span *= 2.0;
        }
        if !converged {
            let (residual, _) = residual_of(model, &current)?;
            return Err(LnaError::NoSteadyState { residual, iterations, t_end });
        }
    }

    let xnorm = x.amax();
    let names = model.species_names();
    for (i, v) in x.iter().enumerate() {
        if *v < -1e-12 * (1.0 + xnorm) {
            return Err(LnaError::NegativeSteadyState { species: names[i].clone(), value: *v });
        }
    }
    let (residual, rate_scale) = residual_of(model, &x)?;
    let abscissa = spectral_abscissa(&jacobian_j(model, &x)?);
    let hurwitz = abscissa < 0.0;
    let mut warnings = Vec::new();
    if !hurwitz {
        warnings.push(format!(
            "steady state is not asymptotically stable: J(x_ss) has spectral abscissa {abscissa:.6e}"
        ));
    }
    Ok(SteadyState {
        x,
        residual,
        rate_scale,
        spectral_abscissa: abscissa,
        hurwitz,
        newton_iterations: iterations,
        used_integration,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{linear_network, toy_network};

    #[test]
    fn linear_network_steady_state() {
        let net = linear_network();
        let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default()).unwrap();
        assert!((ss.x[0] - 1.0).abs() < 1e-12);
        assert!(ss.hurwitz);
    }

    #[test]
    fn toy_symmetric_start_gives_symmetric_saddle() {
        let net = toy_network();
        let ss = steady_state(&net, &DVector::from_element(4, 1.0), &SteadyStateOptions::default()).unwrap();
        assert!(ss.residual <= 1e-10 * (1.0 + ss.rate_scale));
        assert!(ss.x.iter().all(|v| *v > 0.0));
        assert!((ss.x[0] - ss.x[2]).abs() <= 1e-8);
        assert!((ss.x[1] - ss.x[3]).abs() <= 1e-8);
        assert!(!ss.hurwitz);
        assert!(!ss.warnings.is_empty());
    }

    #[test]
    fn toy_default_start_is_stable() {
        let net = toy_network();
        let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default()).unwrap();
        assert!(ss.hurwitz, "abscissa {}", ss.spectral_abscissa);
        assert!(ss.x[0] > ss.x[2]);
    }
}
