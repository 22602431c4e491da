//! Macroscopic trajectory and fluctuation covariance of the toy network,
//! with the covariance at a late time checked against the algebraic
//! Lyapunov solution.

use lna_mor::gramians::solve_lyapunov_eq;
use lna_mor::lna::{
    diffusion, jacobian_j, simulate_lna, steady_state, uniform_times, CovMode, OdeOptions, SteadyStateOptions,
};
use lna_mor::models::toy_network;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default())?;
    let t_end = 20.0 / ss.spectral_abscissa.abs();
    let times = uniform_times(0.0, t_end, 201);
    let (traj, cov) = simulate_lna(&net, &ss.x, &DMatrix::zeros(4, 4), &times, &OdeOptions::default(), CovMode::Interpolate)?;
    let stationary = solve_lyapunov_eq(&jacobian_j(&net, &ss.x)?, &diffusion(&net, &ss.x)?)?;
    println!("x(t_end) = {}", traj.last_state().transpose());
    println!("X(t_end) ={}", cov.last());
    println!("relative gap to the stationary covariance: {:.2e}", (cov.last() - &stationary).norm() / stationary.norm());
    let mut csv = Vec::new();
    cov.write_csv(&mut csv)?;
    println!("covariance CSV header: {}", String::from_utf8(csv)?.lines().next().unwrap_or(""));
    Ok(())
}
