//! Closed-form diagonal Gramian of a Metzler drift matrix.

use lna_mor::gramians::{is_metzler, metzler_diagonal_gramian, metzler_violations};
use lna_mor::linalg::sym_lambda_max;
use lna_mor::lna::{jacobian_j, steady_state, SteadyStateOptions};
use lna_mor::models::{chain_network, toy_network};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chain = chain_network();
    let ss = steady_state(&chain, chain.x0(), &SteadyStateOptions::default())?;
    let a = jacobian_j(&chain, &ss.x)?;
    println!("chain Jacobian is Metzler: {}", is_metzler(&a));
    let rhs = DMatrix::identity(a.nrows(), a.nrows());
    let p = metzler_diagonal_gramian(&a, &rhs)?;
    println!("diagonal P = {}", p.diagonal().transpose());
    println!("lambda_max(A P + P Aᵀ + I) = {:.3e}", sym_lambda_max(&(&a * &p + &p * a.transpose() + &rhs)));

    let toy = toy_network();
    let ss = steady_state(&toy, toy.x0(), &SteadyStateOptions::default())?;
    for v in metzler_violations(&jacobian_j(&toy, &ss.x)?) {
        println!("toy violation J[{}, {}] = {:.4}", toy.species()[v.row], toy.species()[v.col], v.value);
    }
    Ok(())
}
