use nalgebra::{DMatrix, DVector};

use super::{KineticModel, NetworkError, RateError, ReactionNetwork};

/// Largest condition number accepted for a species transformation.
pub const MAX_TRANSFORM_CONDITION: f64 = 1e12;

/// A network expressed in coordinates m = T x.
///
/// Stoichiometry becomes T·S and rates are evaluated as f(T⁻¹ m); the
/// macroscopic trajectory of the transformed model is T times the original.
#[derive(Debug, Clone)]
pub struct TransformedNetwork {
    base: ReactionNetwork,
    t: DMatrix<f64>,
    t_inv: DMatrix<f64>,
    stoichiometry: DMatrix<f64>,
    m0: DVector<f64>,
    names: Vec<String>,
}

/// Applies an invertible change of species coordinates.
pub fn transform_network(
    net: &ReactionNetwork,
    t: &DMatrix<f64>,
) -> Result<TransformedNetwork, NetworkError> {
    let n = net.species().len();
    if t.nrows() != n || t.ncols() != n {
        return Err(NetworkError::TransformShape { expected: n, rows: t.nrows(), cols: t.ncols() });
    }
    let sv = t.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_TRANSFORM_CONDITION) {
        return Err(NetworkError::SingularTransform { cond });
    }
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or(NetworkError::SingularTransform { cond })?;
    Ok(TransformedNetwork {
        stoichiometry: t * net.stoichiometry(),
        m0: t * net.x0(),
        names: (1..=n).map(|i| format!("z{i}")).collect(),
        base: net.clone(),
        t: t.clone(),
        t_inv,
    })
}

impl TransformedNetwork {
    pub fn base(&self) -> &ReactionNetwork {
        &self.base
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn inverse_transform(&self) -> &DMatrix<f64> {
        &self.t_inv
    }

    /// Maps transformed coordinates back to species concentrations.
    pub fn to_species(&self, m: &DVector<f64>) -> DVector<f64> {
        &self.t_inv * m
    }
}

impl KineticModel for TransformedNetwork {
    fn species_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn stoichiometry(&self) -> &DMatrix<f64> {
        &self.stoichiometry
    }

    fn rates(&self, m: &DVector<f64>) -> Result<DVector<f64>, RateError> {
        self.base.eval_rates(&self.to_species(m))
    }

    fn rate_jacobian_at(&self, m: &DVector<f64>) -> Result<DMatrix<f64>, RateError> {
        Ok(self.base.eval_rate_jacobian(&self.to_species(m))? * &self.t_inv)
    }

    fn volume(&self) -> f64 {
        self.base.volume()
    }

    fn initial_state(&self) -> DVector<f64> {
        self.m0.clone()
    }

    fn reaction_name(&self, i: usize) -> &str {
        &self.base.reactions()[i].name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::toy_network;

    #[test]
    fn identity_transform_is_noop() {
        let net = toy_network();
        let tn = transform_network(&net, &DMatrix::identity(4, 4)).unwrap();
        assert_eq!(tn.stoichiometry(), net.stoichiometry());
        let x = DVector::from_vec(vec![0.3, 1.2, 0.7, 2.0]);
        assert_eq!(tn.rates(&x).unwrap(), net.eval_rates(&x).unwrap());
    }

    #[test]
    fn scaling_first_row() {
        let net = toy_network();
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0, 1.0]));
        let tn = transform_network(&net, &t).unwrap();
        for j in 0..net.stoichiometry().ncols() {
            assert_eq!(tn.stoichiometry()[(0, j)], 2.0 * net.stoichiometry()[(0, j)]);
        }
    }

    #[test]
    fn singular_rejected() {
        let net = toy_network();
        let mut t = DMatrix::identity(4, 4);
        t[(3, 3)] = 0.0;
        assert!(matches!(
            transform_network(&net, &t),
            Err(NetworkError::SingularTransform { .. })
        ));
    }
}
