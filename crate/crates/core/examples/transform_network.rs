//! A change of species coordinates m = T x: the transformed network's
//! trajectory is T times the original one.

use lna_mor::lna::{simulate_macroscopic, uniform_times, OdeOptions};
use lna_mor::models::toy_network;
use lna_mor::netparse::{transform_network, KineticModel};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = toy_network();
    let t = DMatrix::from_row_slice(4, 4, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
    let tn = transform_network(&net, &t)?;
    println!("transformed stoichiometry:{}", tn.stoichiometry());
    let times = uniform_times(0.0, 10.0, 6);
    let opts = OdeOptions::default();
    let x = simulate_macroscopic(&net, net.x0(), &times, &opts)?;
    let m = simulate_macroscopic(&tn, &tn.initial_state(), &times, &opts)?;
    let gap = (m.states() - x.states() * t.transpose()).amax();
    println!("max |m(t) - T x(t)| = {gap:.2e}");
    Ok(())
}
