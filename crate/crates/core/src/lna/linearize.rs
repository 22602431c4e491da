use nalgebra::{DMatrix, DVector};

use super::{jacobian_j, noise_input, LnaError};
use crate::linalg::{spectral_abscissa, submatrix, subvector};
use crate::netparse::KineticModel;

/// LTI fluctuation model `ν̇ = A ν + B Γ`, `y = C ν` at a steady state.
///
/// States are reordered so that the `l` retained species come first;
/// `order[i]` is the original species index of state `i`.
#[derive(Debug, Clone)]
pub struct LinearFluctuationSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub l: usize,
    pub k: usize,
    pub x_ss: DVector<f64>,
    pub order: Vec<usize>,
    pub labels: Vec<String>,
}

impl LinearFluctuationSystem {
    /// Builds a system from explicit matrices (`C = [I_l 0]`).
    pub fn from_matrices(a: DMatrix<f64>, b: DMatrix<f64>, l: usize) -> Result<Self, LnaError> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || l == 0 || l > n {
            return Err(LnaError::InvalidInput("inconsistent system dimensions".into()));
        }
        let abscissa = spectral_abscissa(&a);
        if !(abscissa < 0.0) {
            return Err(LnaError::NotHurwitz { abscissa });
        }
        Ok(LinearFluctuationSystem {
            c: output_matrix(l, n),
            a,
            b,
            l,
            k: n - l,
            x_ss: DVector::zeros(n),
            order: (0..n).collect(),
            labels: (1..=n).map(|i| format!("x{i}")).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.l + self.k
    }

    /// `B Bᵀ`.
    pub fn bbt(&self) -> DMatrix<f64> {
        &self.b * self.b.transpose()
    }

    /// `Cᵀ C`.
    pub fn ctc(&self) -> DMatrix<f64> {
        self.c.transpose() * &self.c
    }
}

pub(crate) fn output_matrix(l: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(l, n, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Linearizes with an explicit state ordering whose first `l` entries are
/// the retained species.
pub fn linearize_with_order<M: KineticModel + ?Sized>(
    model: &M,
    x_ss: &DVector<f64>,
    order: &[usize],
    l: usize,
) -> Result<LinearFluctuationSystem, LnaError> {
    let n = model.n_species();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(LnaError::Selection("state ordering must be a permutation of the species".into()));
    }
    if l == 0 {
        return Err(LnaError::Selection("at least one species must be retained".into()));
    }
    if x_ss.len() != n {
        return Err(LnaError::InvalidInput("steady state has wrong dimension".into()));
    }
    let j = jacobian_j(model, x_ss)?;
    let a = submatrix(&j, order, order);
    let abscissa = spectral_abscissa(&a);
    if !(abscissa < 0.0) {
        return Err(LnaError::NotHurwitz { abscissa });
    }
    let bfull = noise_input(model, x_ss)?;
    let all_cols: Vec<usize> = (0..bfull.ncols()).collect();
    let b = submatrix(&bfull, order, &all_cols);
    let names = model.species_names();
    Ok(LinearFluctuationSystem {
        a,
        b,
        c: output_matrix(l, n),
        l,
        k: n - l,
        x_ss: subvector(x_ss, order),
        order: order.to_vec(),
        labels: order.iter().map(|&i| names[i].clone()).collect(),
    })
}

/// Linearizes at `x_ss` with `retained` species first, the rest in
/// declaration order.
pub fn linearize_at<M: KineticModel + ?Sized>(
    model: &M,
    x_ss: &DVector<f64>,
    retained: &[usize],
) -> Result<LinearFluctuationSystem, LnaError> {
    let n = model.n_species();
    if retained.is_empty() {
        return Err(LnaError::Selection("at least one species must be retained".into()));
    }
    let mut order = retained.to_vec();
    order.extend((0..n).filter(|i| !retained.contains(i)));
    linearize_with_order(model, x_ss, &order, retained.len())
}
