//! Steady state of the toy gene-repression network and its stability.

use lna_mor::lna::{steady_state, SteadyStateOptions};
use lna_mor::models::toy_network;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default())?;
    for (name, v) in net.species().iter().zip(ss.x.iter()) {
        println!("{name:>3} = {v:.8}");
    }
    println!("residual {:.2e}, spectral abscissa {:.4}, hurwitz {}", ss.residual, ss.spectral_abscissa, ss.hurwitz);
    Ok(())
}
