//! Euler-Maruyama paths of the linearized fluctuations at steady state;
//! the ensemble variance approaches the stationary covariance.

use lna_mor::gramians::solve_lyapunov_eq;
use lna_mor::lna::{fluctuation_ensemble, linearize_at, steady_state, FluctuationDynamics, PathOptions, SteadyStateOptions};
use lna_mor::models::toy_network;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default())?;
    let sys = linearize_at(&net, &ss.x, &[0, 1, 2, 3])?;
    let stationary = solve_lyapunov_eq(&sys.a, &sys.bbt())?;
    let opts = PathOptions { n_paths: 4000, dt: 0.02, t_end: 150.0, seed: 7, record_every: 7500 };
    let ens = fluctuation_ensemble(&FluctuationDynamics::Linear { a: &sys.a, b: &sys.b }, &opts)?;
    let sample = ens.cov.last().expect("final record");
    for i in 0..4 {
        println!(
            "{:>3}: ensemble variance {:.4e}, stationary {:.4e}",
            net.species()[i],
            sample[(i, i)],
            stationary[(i, i)]
        );
    }
    Ok(())
}
