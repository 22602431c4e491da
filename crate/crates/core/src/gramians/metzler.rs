use nalgebra::{DMatrix, DVector};

use super::barrier::BarrierOptions;
use super::structured::{solve_structured_lmi, GramianStructure};
use super::{GramianError, GramianKind};
use crate::linalg::{max_abs, spectral_abscissa, sym_lambda_max, sym_lambda_min};

/// A negative off-diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetzlerViolation {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Off-diagonal entries below `-1e-12·max|A|`, in row-major order.
pub fn metzler_violations(a: &DMatrix<f64>) -> Vec<MetzlerViolation> {
    let tol = 1e-12 * max_abs(a);
    let mut out = Vec::new();
    for row in 0..a.nrows() {
        for col in 0..a.ncols() {
            if row != col && a[(row, col)] < -tol {
                out.push(MetzlerViolation { row, col, value: a[(row, col)] });
            }
        }
    }
    out
}

pub fn is_metzler(a: &DMatrix<f64>) -> bool {
    a.is_square() && metzler_violations(a).is_empty()
}

/// Diagonal `P` with `A P + P Aᵀ + rhs ⪯ 0` for a Metzler Hurwitz `A`.
///
/// With `ξ = -A⁻¹1` and `η = -A⁻ᵀ1` (both positive), `D = diag(ξ/η)` makes
/// `A D + D Aᵀ` a symmetric Metzler matrix mapping `η` to a negative vector,
/// hence negative definite. `D` is scaled up until it dominates `rhs`. If the
/// numerical check fails, a diagonal barrier solve is used instead.
pub fn metzler_diagonal_gramian(a: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, GramianError> {
    let n = a.nrows();
    if !a.is_square() || rhs.shape() != (n, n) {
        return Err(GramianError::Dimension("A and the forcing term must be square and equal-sized".into()));
    }
    let violations = metzler_violations(a);
    if !violations.is_empty() {
        return Err(GramianError::NotMetzler { violations });
    }
    let abscissa = spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(GramianError::NotHurwitz { abscissa });
    }
    if let Some(p) = diagonal_candidate(a, rhs) {
        return Ok(p);
    }
    solve_structured_lmi(a, rhs, &GramianStructure::diagonal(n), &BarrierOptions::default(), GramianKind::P)
}

pub(crate) fn diagonal_candidate(a: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let ones = DVector::from_element(n, 1.0);
    let xi = -a.clone().lu().solve(&ones)?;
    let eta = -a.transpose().lu().solve(&ones)?;
    if xi.iter().chain(eta.iter()).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let d = DMatrix::from_diagonal(&xi.component_div(&eta));
    let ad = a * &d;
    let neg = -(&ad + ad.transpose());
    let margin = sym_lambda_min(&neg);
    if !(margin > 1e-12 * neg.amax()) {
        return None;
    }
    let alpha = (sym_lambda_max(rhs) / margin).max(1.0);
    let p = d * alpha;
    let ap = a * &p;
    let check = sym_lambda_max(&(&ap + ap.transpose() + rhs));
    (check <= 1e-10 * crate::linalg::sym_norm2(rhs).max(f64::MIN_POSITIVE)).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_case() {
        let a = -DMatrix::<f64>::identity(2, 2);
        let p = metzler_diagonal_gramian(&a, &(DMatrix::identity(2, 2) * 2.0)).unwrap();
        assert!(p[(0, 0)] >= 1.0 && p[(0, 1)] == 0.0);
        let ap = &a * &p;
        assert!(sym_lambda_max(&(&ap + ap.transpose() + DMatrix::identity(2, 2) * 2.0)) <= 1e-12);
    }

    #[test]
    fn coupled_metzler() {
        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]);
        let rhs = DMatrix::identity(2, 2);
        let p = metzler_diagonal_gramian(&a, &rhs).unwrap();
        assert_eq!(p[(0, 1)], 0.0);
        let ap = &a * &p;
        assert!(sym_lambda_max(&(&ap + ap.transpose() + rhs)) <= 1e-10);
    }

    #[test]
    fn violation_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, 0.0, -1.0]);
        assert!(!is_metzler(&a));
        assert_eq!(metzler_violations(&a), vec![MetzlerViolation { row: 0, col: 1, value: -0.5 }]);
        assert!(matches!(
            metzler_diagonal_gramian(&a, &DMatrix::identity(2, 2)),
            Err(GramianError::NotMetzler { .. })
        ));
    }
}
