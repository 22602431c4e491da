use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use super::expr::{EvalError, Expr, Symbols};
use super::{KineticModel, NetworkError, RateError};

/// Volume used when a model file does not declare one.
pub const DEFAULT_VOLUME: f64 = 100.0;

/// A single irreversible reaction channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub name: String,
    /// `(species index, coefficient)` pairs, coefficients positive.
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    /// Macroscopic rate law f_i(x).
    pub rate: Expr,
}

impl Reaction {
    /// Net change of every species when this reaction fires once.
    pub fn net_stoichiometry(&self, n_species: usize) -> Vec<f64> {
        let mut col = vec![0.0; n_species];
        for &(s, c) in &self.reactants {
            col[s] -= f64::from(c);
        }
        for &(s, c) in &self.products {
            col[s] += f64::from(c);
        }
        col
    }
}

/// Validated reaction network with symbolic rates and exact stoichiometry.
///
/// Immutable after construction; the stoichiometry matrix and the symbolic
/// rate Jacobian are assembled once in [`ReactionNetwork::new`].
#[derive(Debug, Clone)]
pub struct ReactionNetwork {
    species: Vec<String>,
    x0: DVector<f64>,
    param_names: Vec<String>,
    param_values: Vec<f64>,
    reactions: Vec<Reaction>,
    volume: f64,
    outputs: Vec<usize>,
    stoichiometry: DMatrix<f64>,
    jacobian: Vec<Vec<Expr>>,
}

impl PartialEq for ReactionNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.species == other.species
            && self.x0 == other.x0
            && self.param_names == other.param_names
            && self.param_values == other.param_values
            && self.reactions == other.reactions
            && self.volume == other.volume
            && self.outputs == other.outputs
    }
}

/// Raw parts of a network before validation.
#[derive(Debug, Clone, Default)]
pub struct NetworkParts {
    pub species: Vec<(String, f64)>,
    pub params: Vec<(String, f64)>,
    pub reactions: Vec<Reaction>,
    pub volume: Option<f64>,
    pub outputs: Vec<usize>,
}

impl ReactionNetwork {
    pub fn new(parts: NetworkParts) -> Result<Self, NetworkError> {
        let mut seen = HashSet::new();
        for (name, x0) in &parts.species {
            if !seen.insert(name.as_str()) {
                return Err(NetworkError::DuplicateSpecies(name.clone()));
            }
            if !x0.is_finite() || *x0 < 0.0 {
                return Err(NetworkError::InvalidInitial { species: name.clone(), value: *x0 });
            }
        }
        for (name, _) in &parts.params {
            if !seen.insert(name.as_str()) {
                return Err(NetworkError::DuplicateSymbol(name.clone()));
            }
        }
        let mut rnames = HashSet::new();
        for r in &parts.reactions {
            if !rnames.insert(r.name.as_str()) {
                return Err(NetworkError::DuplicateReaction(r.name.clone()));
            }
        }
        let volume = parts.volume.unwrap_or(DEFAULT_VOLUME);
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(NetworkError::InvalidVolume(volume));
        }
        let n = parts.species.len();
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        let mut out_seen = HashSet::new();
        for &o in &parts.outputs {
            if o >= n || !out_seen.insert(o) {
                return Err(NetworkError::InvalidOutputs);
            }
        }

        let mut stoichiometry = DMatrix::zeros(n, parts.reactions.len());
        for (j, r) in parts.reactions.iter().enumerate() {
            let col = r.net_stoichiometry(n);
            if col.iter().all(|&v| v == 0.0) {
                return Err(NetworkError::ZeroStoichiometry(r.name.clone()));
            }
            for (i, v) in col.into_iter().enumerate() {
                stoichiometry[(i, j)] = v;
            }
        }
        let jacobian = parts
            .reactions
            .iter()
            .map(|r| (0..n).map(|i| r.rate.diff(i)).collect())
            .collect();

        let net = ReactionNetwork {
            x0: DVector::from_iterator(n, parts.species.iter().map(|s| s.1)),
            species: parts.species.into_iter().map(|s| s.0).collect(),
            param_names: parts.params.iter().map(|p| p.0.clone()).collect(),
            param_values: parts.params.iter().map(|p| p.1).collect(),
            reactions: parts.reactions,
            volume,
            outputs: parts.outputs,
            stoichiometry,
            jacobian,
        };
        let f = net.eval_rates(&net.x0)?;
        for (r, v) in net.reactions.iter().zip(f.iter()) {
            if *v < 0.0 {
                return Err(NetworkError::NegativeRate { reaction: r.name.clone(), value: *v });
            }
        }
        Ok(net)
    }

    /// Reassembles the raw parts (used for editing and permutation).
    pub fn to_parts(&self) -> NetworkParts {
        NetworkParts {
            species: self.species.iter().cloned().zip(self.x0.iter().copied()).collect(),
            params: self
                .param_names
                .iter()
                .cloned()
                .zip(self.param_values.iter().copied())
                .collect(),
            reactions: self.reactions.clone(),
            volume: Some(self.volume),
            outputs: self.outputs.clone(),
        }
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    /// Resolves a list of species names to indices.
    pub fn species_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, NetworkError> {
        names
            .iter()
            .map(|n| {
                self.species_index(n.as_ref())
                    .ok_or_else(|| NetworkError::UnknownSpecies(n.as_ref().to_string()))
            })
            .collect()
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn params(&self) -> impl Iterator<Item = (&str, f64)> {
        self.param_names.iter().map(String::as_str).zip(self.param_values.iter().copied())
    }

    pub fn param_values(&self) -> &[f64] {
        &self.param_values
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Stoichiometry matrix S, species × reactions.
    pub fn stoichiometry(&self) -> &DMatrix<f64> {
        &self.stoichiometry
    }

    /// Copy of this network with a different compartment volume.
    pub fn with_volume(&self, volume: f64) -> Result<Self, NetworkError> {
        let mut parts = self.to_parts();
        parts.volume = Some(volume);
        ReactionNetwork::new(parts)
    }

    /// Copy of this network with a different initial state.
    pub fn with_initial_state(&self, x0: &DVector<f64>) -> Result<Self, NetworkError> {
        if x0.len() != self.species.len() {
            return Err(NetworkError::DimensionMismatch {
                expected: self.species.len(),
                found: x0.len(),
            });
        }
        let mut parts = self.to_parts();
        for (s, v) in parts.species.iter_mut().zip(x0.iter()) {
            s.1 = *v;
        }
        ReactionNetwork::new(parts)
    }

    /// Evaluates every rate law at concentrations `x`.
    pub fn eval_rates(&self, x: &DVector<f64>) -> Result<DVector<f64>, RateError> {
        self.check_dim(x)?;
        let xs = x.as_slice();
        let mut f = DVector::zeros(self.reactions.len());
        for (i, r) in self.reactions.iter().enumerate() {
            f[i] = r.rate.eval(xs, &self.param_values).map_err(|e| rate_err(r, e))?;
        }
        Ok(f)
    }

    /// Symbolic Jacobian ∂f/∂x, reactions × species.
    pub fn rate_jacobian(&self) -> &[Vec<Expr>] {
        &self.jacobian
    }

    /// Numeric ∂f/∂x at `x`.
    pub fn eval_rate_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, RateError> {
        self.check_dim(x)?;
        let xs = x.as_slice();
        let n = self.species.len();
        let mut d = DMatrix::zeros(self.reactions.len(), n);
        for (i, (r, row)) in self.reactions.iter().zip(&self.jacobian).enumerate() {
            for (j, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    d[(i, j)] = e.eval(xs, &self.param_values).map_err(|err| rate_err(r, err))?;
                }
            }
        }
        Ok(d)
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), RateError> {
        if x.len() != self.species.len() {
            return Err(RateError::Dimension { expected: self.species.len(), found: x.len() });
        }
        Ok(())
    }

    /// Reorders species so that new species `k` is old species `perm[k]`.
    ///
    /// Initial state, stoichiometry rows, outputs and rate expressions are
    /// all reindexed consistently.
    pub fn permute_species(&self, perm: &[usize]) -> Result<Self, NetworkError> {
        let n = self.species.len();
        if perm.len() != n {
            return Err(NetworkError::InvalidPermutation);
        }
        let mut old_to_new = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || old_to_new[old] != usize::MAX {
                return Err(NetworkError::InvalidPermutation);
            }
            old_to_new[old] = new;
        }
        let remap = |side: &[(usize, u32)]| side.iter().map(|&(s, c)| (old_to_new[s], c)).collect();
        let parts = NetworkParts {
            species: perm.iter().map(|&o| (self.species[o].clone(), self.x0[o])).collect(),
            params: self
                .param_names
                .iter()
                .cloned()
                .zip(self.param_values.iter().copied())
                .collect(),
            reactions: self
                .reactions
                .iter()
                .map(|r| Reaction {
                    name: r.name.clone(),
                    reactants: remap(&r.reactants),
                    products: remap(&r.products),
                    rate: r.rate.remap_species(&old_to_new),
                })
                .collect(),
            volume: Some(self.volume),
            outputs: self.outputs.iter().map(|&o| old_to_new[o]).collect(),
        };
        ReactionNetwork::new(parts)
    }

    /// Serializes back to the line-oriented model format.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for (s, v) in self.species.iter().zip(self.x0.iter()) {
            out.push_str(&format!("species {s} = {v:?}\n"));
        }
        for (p, v) in self.param_names.iter().zip(&self.param_values) {
            out.push_str(&format!("param {p} = {v:?}\n"));
        }
        out.push_str(&format!("volume = {:?}\n", self.volume));
        if !self.outputs.is_empty() {
            let names: Vec<&str> = self.outputs.iter().map(|&o| self.species[o].as_str()).collect();
            out.push_str(&format!("output {}\n", names.join(" ")));
        }
        let symbols = Symbols { species: &self.species, params: &self.param_names };
        let side = |terms: &[(usize, u32)]| {
            terms
                .iter()
                .map(|&(s, c)| {
                    if c == 1 {
                        self.species[s].clone()
                    } else {
                        format!("{c} {}", self.species[s])
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        for r in &self.reactions {
            out.push_str(&format!(
                "reaction {}: {} -> {} @ {}\n",
                r.name,
                side(&r.reactants),
                side(&r.products),
                r.rate.display(&symbols)
            ));
        }
        out
    }
}

fn rate_err(r: &Reaction, source: EvalError) -> RateError {
    RateError::Eval { reaction: r.name.clone(), source }
}

impl KineticModel for ReactionNetwork {
    fn species_names(&self) -> Vec<String> {
        self.species.clone()
    }

    fn stoichiometry(&self) -> &DMatrix<f64> {
        &self.stoichiometry
    }

    fn rates(&self, x: &DVector<f64>) -> Result<DVector<f64>, RateError> {
        self.eval_rates(x)
    }

    fn rate_jacobian_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, RateError> {
        self.eval_rate_jacobian(x)
    }

    fn volume(&self) -> f64 {
        self.volume
    }

    fn initial_state(&self) -> DVector<f64> {
        self.x0.clone()
    }

    fn reaction_name(&self, i: usize) -> &str {
        &self.reactions[i].name
    }
}
