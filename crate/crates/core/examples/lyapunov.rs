//! Solves A X + X Aᵀ + Q = 0 and reports the residual.

use lna_mor::gramians::{lyapunov_residual, solve_lyapunov_eq};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, -0.5, -3.0, 1.0, 0.0, 0.3, -0.7]);
    let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.1, 0.0, 0.1, 0.4]);
    let x = solve_lyapunov_eq(&a, &q)?;
    println!("X ={x}");
    println!("residual {:.2e}", lyapunov_residual(&a, &x, &q).norm());
    Ok(())
}
