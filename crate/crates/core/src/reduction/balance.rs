use nalgebra::{DMatrix, DVector};

use super::ReductionError;
use crate::linalg::{cholesky_lower, symmetrize};

/// Balancing transformation of one reducible block.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedBlock {
    pub t22: DMatrix<f64>,
    /// Diagonal of Σ22, nonincreasing.
    pub sigma: DVector<f64>,
}

impl BalancedBlock {
    /// Relative Frobenius errors of `T⁻¹ P T⁻ᵀ = Σ` and `Tᵀ Q T = Σ`.
    pub fn balancing_errors(&self, p22: &DMatrix<f64>, q22: &DMatrix<f64>) -> (f64, f64) {
        let s = DMatrix::from_diagonal(&self.sigma);
        let sn = s.norm().max(f64::MIN_POSITIVE);
        let Some(ti) = self.t22.clone().try_inverse() else {
            return (f64::INFINITY, f64::INFINITY);
        };
        let ep = (&ti * p22 * ti.transpose() - &s).norm() / sn;
        let eq = (self.t22.transpose() * q22 * &self.t22 - &s).norm() / sn;
        (ep, eq)
    }

    pub fn identity(k: usize) -> Self {
        BalancedBlock { t22: DMatrix::identity(k, k), sigma: DVector::from_element(k, 1.0) }
    }
}

/// Balances `P22`, `Q22`: `T22⁻¹ P22 T22⁻ᵀ = T22ᵀ Q22 T22 = Σ22`.
///
/// `P22 = L Lᵀ`, `Lᵀ Q22 L = U Σ² Uᵀ`, `T22 = L U Σ^{-1/2}`. Eigenvectors are
/// sorted by decreasing Σ (stable on ties) and signed so that each column's
/// largest-magnitude entry is positive.
pub fn balance_block(p22: &DMatrix<f64>, q22: &DMatrix<f64>) -> Result<BalancedBlock, ReductionError> {
    let k = p22.nrows();
    if !p22.is_square() || q22.shape() != (k, k) {
        return Err(ReductionError::Dimension("P22 and Q22 must be square and equal-sized".into()));
    }
    if k == 0 {
        return Ok(BalancedBlock { t22: DMatrix::zeros(0, 0), sigma: DVector::zeros(0) });
    }
    let l = cholesky_lower(p22).map_err(|minor| ReductionError::NotPositiveDefinite { matrix: "P22", minor })?;
    cholesky_lower(q22).map_err(|minor| ReductionError::NotPositiveDefinite { matrix: "Q22", minor })?;
    let m = symmetrize(&(l.transpose() * q22 * &l));
    let eig = m.symmetric_eigen();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut u = DMatrix::zeros(k, k);
    let mut sigma = DVector::zeros(k);
    for (c, &i) in idx.iter().enumerate() {
        let w = eig.eigenvalues[i];
        if !(w > 0.0) {
            return Err(ReductionError::NotPositiveDefinite { matrix: "Lᵀ Q22 L", minor: c });
        }
        sigma[c] = w.sqrt();
        let mut col = eig.eigenvectors.column(i).into_owned();
        let pivot = col.iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col = -col;
        }
        u.set_column(c, &col);
    }
    let scale = DMatrix::from_diagonal(&sigma.map(|s| s.powf(-0.5)));
    Ok(BalancedBlock { t22: l * u * scale, sigma })
}

/// Advisory cut-off for choosing how many states to truncate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Truncate entries below this fraction of the largest.
    Relative(f64),
    /// Truncate entries below this value.
    Absolute(f64),
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::Relative(0.01)
    }
}

impl ThresholdRule {
    pub fn cutoff(&self, largest: f64) -> f64 {
        match *self {
            ThresholdRule::Relative(f) => f * largest,
            ThresholdRule::Absolute(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationOrder {
    /// Indices of Σ in decreasing order (stable on ties).
    pub perm: Vec<usize>,
    /// Number of entries below the threshold.
    pub suggested_r: usize,
}

pub fn truncation_order(sigma: &[f64], rule: ThresholdRule) -> TruncationOrder {
    let mut perm: Vec<usize> = (0..sigma.len()).collect();
    perm.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let largest = perm.first().map_or(0.0, |&i| sigma[i]);
    let cut = rule.cutoff(largest);
    TruncationOrder { suggested_r: sigma.iter().filter(|&&s| s < cut).count(), perm }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_inputs() {
        let b = balance_block(&DMatrix::identity(3, 3), &DMatrix::identity(3, 3)).unwrap();
        assert!((b.t22 - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
        assert!(b.sigma.iter().all(|s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn scalar() {
        let b = balance_block(&DMatrix::from_element(1, 1, 9.0), &DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!((b.sigma[0] - 3.0).abs() < 1e-14);
        assert!((b.t22[(0, 0)] - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn equal_singular_values() {
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let b = balance_block(&p, &q).unwrap();
        assert!((b.sigma.clone() - DVector::from_element(2, 2.0)).amax() < 1e-12);
        let (ep, eq) = b.balancing_errors(&p, &q);
        assert!(ep < 1e-12 && eq < 1e-12);
    }

    #[test]
    fn non_pd_reports_minor() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match balance_block(&p, &DMatrix::identity(2, 2)) {
            Err(ReductionError::NotPositiveDefinite { matrix: "P22", minor }) => assert_eq!(minor, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ordering_and_threshold() {
        assert_eq!(truncation_order(&[3.0, 3.0], ThresholdRule::default()).perm, vec![0, 1]);
        assert_eq!(truncation_order(&[1.0, 5.0], ThresholdRule::default()).perm, vec![1, 0]);
        assert_eq!(truncation_order(&[10.0, 0.05, 0.01], ThresholdRule::default()).suggested_r, 2);
        assert_eq!(truncation_order(&[10.0, 0.05, 0.01], ThresholdRule::Absolute(0.02)).suggested_r, 1);
    }
}
