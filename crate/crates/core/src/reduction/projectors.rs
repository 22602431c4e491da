use nalgebra::DMatrix;

use super::balance::BalancedBlock;
use super::ReductionError;

/// Petrov–Galerkin projectors in the ordering "retained states first".
///
/// `W`, `V` span the kept coordinates and `W_r`, `V_r` the truncated ones.
/// Their retained rows are `[I_l 0]` and zero respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet {
    pub w: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub w_r: DMatrix<f64>,
    pub v_r: DMatrix<f64>,
    pub l: usize,
    pub r: usize,
}

impl ProjectorSet {
    /// Builds projectors from a reducible-block transform `T22`, truncating
    /// the listed columns. The kept columns stay in their original order.
    pub fn from_transform(l: usize, t22: &DMatrix<f64>, truncated: &[usize]) -> Result<Self, ReductionError> {
        let k = t22.nrows();
        if !t22.is_square() || truncated.iter().any(|&c| c >= k) {
            return Err(ReductionError::InvalidTruncation(format!("columns {truncated:?} out of range for k = {k}")));
        }
        let mut is_trunc = vec![false; k];
        for &c in truncated {
            if std::mem::replace(&mut is_trunc[c], true) {
                return Err(ReductionError::InvalidTruncation(format!("column {c} listed twice")));
            }
        }
        let ti = t22
            .clone()
            .try_inverse()
            .ok_or_else(|| ReductionError::Dimension("T22 is singular".into()))?
            .transpose();
        let keep: Vec<usize> = (0..k).filter(|&c| !is_trunc[c]).collect();
        let n = l + k;
        let r = truncated.len();
        let mut w = DMatrix::zeros(n, n - r);
        let mut v = DMatrix::zeros(n, n - r);
        for i in 0..l {
            w[(i, i)] = 1.0;
            v[(i, i)] = 1.0;
        }
        for (j, &c) in keep.iter().enumerate() {
            w.view_mut((l, l + j), (k, 1)).copy_from(&t22.column(c));
            v.view_mut((l, l + j), (k, 1)).copy_from(&ti.column(c));
        }
        let mut w_r = DMatrix::zeros(n, r);
        let mut v_r = DMatrix::zeros(n, r);
        for (j, &c) in truncated.iter().enumerate() {
            w_r.view_mut((l, j), (k, 1)).copy_from(&t22.column(c));
            v_r.view_mut((l, j), (k, 1)).copy_from(&ti.column(c));
        }
        Ok(ProjectorSet { w, v, w_r, v_r, l, r })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// Dimension of the kept (differential) coordinates.
    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    /// Largest entry of `|Vᵀ W − I|`.
    pub fn biorthogonality_error(&self) -> f64 {
        let m = self.v.transpose() * &self.w;
        (m - DMatrix::identity(self.dim(), self.dim())).amax()
    }
}

/// Projectors from a balanced block, truncating its last `r` directions.
pub fn build_projectors(balanced: &BalancedBlock, l: usize, r: usize) -> Result<ProjectorSet, ReductionError> {
    let k = balanced.t22.nrows();
    if r > k {
        return Err(ReductionError::InvalidTruncation(format!("r = {r} exceeds k = {k}")));
    }
    let truncated: Vec<usize> = (k - r..k).collect();
    ProjectorSet::from_transform(l, &balanced.t22, &truncated)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block() -> BalancedBlock {
        let t22 = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 1.5]);
        BalancedBlock { t22, sigma: nalgebra::DVector::from_vec(vec![2.0, 1.0]) }
    }

    #[test]
    fn no_truncation_is_square_and_biorthogonal() {
        let p = build_projectors(&block(), 2, 0).unwrap();
        assert_eq!(p.w.shape(), (4, 4));
        assert!(p.biorthogonality_error() < 1e-14);
    }

    #[test]
    fn full_truncation_keeps_retained_only() {
        let p = build_projectors(&block(), 2, 2).unwrap();
        assert_eq!(p.w, DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(p.w_r.rows(0, 2).amax(), 0.0);
    }

    #[test]
    fn partial_truncation_structure() {
        let p = build_projectors(&block(), 2, 1).unwrap();
        assert!(p.biorthogonality_error() < 1e-14);
        assert!((p.v_r.transpose() * &p.w).amax() < 1e-14);
        assert!((p.v.transpose() * &p.w_r).amax() < 1e-14);
        assert_eq!(p.v.view((0, 0), (2, 2)).into_owned(), DMatrix::identity(2, 2));
        assert!(build_projectors(&block(), 2, 3).is_err());
    }
}
