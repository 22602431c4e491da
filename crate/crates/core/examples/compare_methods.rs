//! Structured reduction against the averaging baseline on the toy network,
//! after raising m1 by 0.1 above its steady state.

use lna_mor::lna::{steady_state, SteadyStateOptions};
use lna_mor::metrics::{compare_models, CompareOptions};
use lna_mor::models::toy_network;
use lna_mor::reduction::parse_reduction_config;
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default())?;
    let mut pert = DVector::zeros(4);
    pert[net.species_indices(&["m1"])?[0]] = 0.1;
    for spec in ["retain = m1, m2; lump = {p1, p2}:1", "retain = m1, m2; method = averaging"] {
        let rm = parse_reduction_config(spec)?.reduce(&net, &ss.x)?;
        let report = compare_models(&net, &rm, &pert, &CompareOptions::default())?;
        println!("== {spec}\n{}", report.to_text());
    }
    Ok(())
}
