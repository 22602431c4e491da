//! Block-diagonal Gramians of the toy linearization, and the infeasibility
//! report for a drift matrix that admits no diagonal certificate.

use lna_mor::gramians::{solve_structured_gramians, GramianOptions, PartitionSpec};
use lna_mor::linalg::sym_lambda_max;
use lna_mor::lna::{linearize_at, steady_state, LinearFluctuationSystem, SteadyStateOptions};
use lna_mor::models::toy_network;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default())?;
    let retained = net.species_indices(&["m1", "m2"])?;
    let sys = linearize_at(&net, &ss.x, &retained)?;
    let part = PartitionSpec::two_block(2, 2, 0)?;
    let g = solve_structured_gramians(&sys, &part, &GramianOptions::default())?;
    println!("P ={}Q ={}", g.p, g.q);
    let rp = &sys.a * &g.p + &g.p * sys.a.transpose() + sys.bbt();
    let rq = &g.q * &sys.a + sys.a.transpose() * &g.q + sys.ctc();
    println!("lambda_max residuals: P {:.3e}, Q {:.3e}", sym_lambda_max(&rp), sym_lambda_max(&rq));
    println!("methods: P {:?}, Q {:?}", g.p_method, g.q_method);

    let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, -1.0]);
    let sys = LinearFluctuationSystem::from_matrices(a, DMatrix::identity(2, 2), 1)?;
    let part = PartitionSpec::new(1, vec![vec![1]], vec![0])?;
    match solve_structured_gramians(&sys, &part, &GramianOptions::default()) {
        Ok(_) => println!("unexpectedly feasible"),
        Err(e) => println!("diagonal structure: {e}"),
    }
    Ok(())
}
