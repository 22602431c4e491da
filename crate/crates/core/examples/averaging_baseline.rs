//! Time-scale-separation baseline: the proteins are treated as fast and
//! eliminated through their quasi-steady-state constraint. The reduced
//! fluctuation system equals the Schur-complement formula.

use lna_mor::lna::{linearize_with_order, steady_state, SteadyStateOptions};
use lna_mor::models::toy_network;
use lna_mor::reduction::{averaged_fluctuation_system, reduce_averaging};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default())?;
    let retained = net.species_indices(&["m1", "m2"])?;
    let fast = net.species_indices(&["p1", "p2"])?;
    let rm = reduce_averaging(&net, &ss.x, &retained, &fast)?;
    let lin = rm.linearized()?;
    println!("J_r ={}B_r ={}", lin.a, lin.b);

    let sys = linearize_with_order(&net, &ss.x, rm.order(), retained.len())?;
    let direct = averaged_fluctuation_system(&sys, fast.len())?;
    println!("difference to the block formula: J {:.2e}, B {:.2e}", (&lin.a - &direct.a).amax(), (&lin.b - &direct.b).amax());
    Ok(())
}
