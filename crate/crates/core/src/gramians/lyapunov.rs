use nalgebra::{DMatrix, Schur};

use super::GramianError;
use crate::linalg::{eigenvalues, symmetrize};

/// Residual `A P + P Aᵀ + Q`.
pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let ap = a * p;
    &ap + ap.transpose() + q
}

fn check_pairs(a: &DMatrix<f64>) -> Result<(), GramianError> {
    let ev = eigenvalues(a);
    let tol = 1e-12 * a.norm().max(f64::MIN_POSITIVE);
    for (i, l1) in ev.iter().enumerate() {
        for l2 in &ev[i..] {
            let sum = (l1 + l2).norm();
            if sum <= tol {
                return Err(GramianError::IllPosed { l1: *l1, l2: *l2, sum });
            }
        }
    }
    Ok(())
}

/// Start index and size of each diagonal block of a quasi-triangular matrix.
fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Solves `T_ii X + X T_jjᵀ = R` for one block pair.
fn solve_block(tii: &DMatrix<f64>, tjj: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (p, q) = (tii.nrows(), tjj.nrows());
    if p == 1 && q == 1 {
        let d = tii[(0, 0)] + tjj[(0, 0)];
        return (d != 0.0).then(|| DMatrix::from_element(1, 1, r[(0, 0)] / d));
    }
    let k = DMatrix::<f64>::identity(q, q).kronecker(tii) + tjj.kronecker(&DMatrix::<f64>::identity(p, p));
    let rhs = DMatrix::from_column_slice(p * q, 1, r.as_slice());
    let x = k.lu().solve(&rhs)?;
    Some(DMatrix::from_column_slice(p, q, x.as_slice()))
}

/// Solves `T Y + Y Tᵀ + R = 0` with `T` quasi-upper-triangular.
fn solve_quasi_triangular(t: &DMatrix<f64>, blocks: &[(usize, usize)], r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = t.nrows();
    let mut y = DMatrix::<f64>::zeros(n, n);
    for &(i0, pi) in blocks.iter().rev() {
        let tii = t.view((i0, i0), (pi, pi)).into_owned();
        for &(j0, pj) in blocks.iter().rev() {
            let tjj = t.view((j0, j0), (pj, pj)).into_owned();
            let mut rhs = -r.view((i0, j0), (pi, pj)).into_owned();
            let below_i = n - (i0 + pi);
            if below_i > 0 {
                rhs -= t.view((i0, i0 + pi), (pi, below_i)) * y.view((i0 + pi, j0), (below_i, pj));
            }
            let right_j = n - (j0 + pj);
            if right_j > 0 {
                rhs -= y.view((i0, j0 + pj), (pi, right_j)) * t.view((j0, j0 + pj), (pj, right_j)).transpose();
            }
            let x = solve_block(&tii, &tjj, &rhs)?;
            y.view_mut((i0, j0), (pi, pj)).copy_from(&x);
        }
    }
    Some(y)
}

/// Solves `A P + P Aᵀ + Q = 0` by the Bartels–Stewart method.
///
/// Uses a real Schur form of `A`, back-substitutes over its 1×1 and 2×2
/// diagonal blocks, then applies a few steps of iterative refinement. The
/// result is symmetrized when `Q` is symmetric.
pub fn solve_lyapunov_eq(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, GramianError> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(GramianError::Dimension(format!(
            "A is {}x{}, Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    check_pairs(a)?;
    let (u, t) = Schur::new(a.clone()).unpack();
    let blocks = diagonal_blocks(&t);
    let solve = |rhs: &DMatrix<f64>| -> Result<DMatrix<f64>, GramianError> {
        let rt = u.transpose() * rhs * &u;
        let y = solve_quasi_triangular(&t, &blocks, &rt)
            .ok_or_else(|| GramianError::Numerical("singular block in Schur back-substitution".into()))?;
        Ok(&u * y * u.transpose())
    };
    let symmetric = (q - q.transpose()).amax() <= 1e-14 * q.amax();
    let fix = |p: DMatrix<f64>| if symmetric { symmetrize(&p) } else { p };

    let mut p = fix(solve(q)?);
    let qn = q.norm().max(f64::MIN_POSITIVE);
    let mut res = lyapunov_residual(a, &p, q);
    for _ in 0..3 {
        if res.norm() <= 1e-14 * qn {
            break;
        }
        let cand = fix(&p + solve(&res)?);
        let cres = lyapunov_residual(a, &cand, q);
        if cres.norm() >= res.norm() {
            break;
        }
        p = cand;
        res = cres;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_identity() {
        let a = -DMatrix::<f64>::identity(3, 3);
        let p = solve_lyapunov_eq(&a, &(DMatrix::identity(3, 3) * 2.0)).unwrap();
        assert!((p - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn complex_pair_block() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.5, -2.0, -1.0, 0.0, 0.3, 0.1, -3.0]);
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 0.5]);
        let p = solve_lyapunov_eq(&a, &q).unwrap();
        assert!(lyapunov_residual(&a, &p, &q).norm() < 1e-12);
        assert_eq!(p, p.transpose());
    }

    #[test]
    fn ill_posed_pair_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let err = solve_lyapunov_eq(&a, &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, GramianError::IllPosed { .. }), "{err}");
    }
}
