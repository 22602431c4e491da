use nalgebra::{DMatrix, DVector};

use super::balance::{balance_block, truncation_order, BalancedBlock, ThresholdRule};
use super::model::{ReducedLinearSystem, ReducedModel, ReductionMethod};
use super::projectors::ProjectorSet;
use super::ReductionError;
use crate::gramians::{solve_structured_gramians, BlockMode, GramianOptions, PartitionSpec};
use crate::linalg::{spectral_abscissa, submatrix};
use crate::lna::{linearize_with_order, LinearFluctuationSystem};
use crate::netparse::ReactionNetwork;

/// Coordinate change applied to the reducible block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransformMode {
    /// Balance the structured Gramians.
    #[default]
    Balanced,
    /// Keep species coordinates (`T22 = I`) and truncate the last species
    /// of each group.
    Identity,
}

/// How many states to remove from a lumped group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupTruncation {
    Count(usize),
    /// Use the threshold rule on the group's Σ22.
    Auto,
}

/// A lumped region of species (base-network indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumpedGroup {
    pub species: Vec<usize>,
    pub truncate: GroupTruncation,
}

#[derive(Debug, Clone, Default)]
pub struct StructuredOptions {
    pub gramian: GramianOptions,
    pub transform: TransformMode,
    pub threshold: ThresholdRule,
}

fn check_species(n: usize, lists: &[&[usize]]) -> Result<(), ReductionError> {
    let mut seen = vec![false; n];
    for &i in lists.iter().flat_map(|l| l.iter()) {
        if i >= n {
            return Err(ReductionError::Selection(format!("species index {i} out of range")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(ReductionError::Selection(format!("species index {i} appears twice")));
        }
    }
    Ok(())
}

/// Structured reduction of `net` about the steady state `x_ss`.
///
/// `retained` species are kept exactly and become the outputs. Species in
/// neither `retained` nor any group form singleton groups that are not
/// truncated. Each group is balanced on its own in per-group mode; in
/// two-block mode the whole reducible block is balanced and the total
/// truncation count is removed from it.
pub fn reduce_structured(
    net: &ReactionNetwork,
    x_ss: &DVector<f64>,
    retained: &[usize],
    groups: &[LumpedGroup],
    opts: &StructuredOptions,
) -> Result<ReducedModel, ReductionError> {
    let n = net.species().len();
    let mut lists: Vec<&[usize]> = vec![retained];
    lists.extend(groups.iter().map(|g| g.species.as_slice()));
    check_species(n, &lists)?;
    if retained.is_empty() {
        return Err(ReductionError::Selection("at least one species must be retained".into()));
    }
    let mut all_groups: Vec<LumpedGroup> = groups.iter().filter(|g| !g.species.is_empty()).cloned().collect();
    let covered: Vec<usize> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    for i in (0..n).filter(|i| !covered.contains(i)) {
        all_groups.push(LumpedGroup { species: vec![i], truncate: GroupTruncation::Count(0) });
    }

    let l = retained.len();
    let mut order = retained.to_vec();
    let mut state_groups = Vec::with_capacity(all_groups.len());
    for g in &all_groups {
        state_groups.push((order.len()..order.len() + g.species.len()).collect::<Vec<_>>());
        order.extend(&g.species);
    }
    let sys = linearize_with_order(net, x_ss, &order, l)?;
    let k = sys.k;

    let (t22, gramians, balanced, truncated, r_per_group, suggested) = match opts.transform {
        TransformMode::Identity => {
            let mut truncated = Vec::new();
            let mut r_per_group = Vec::new();
            let mut offset = 0;
            for g in &all_groups {
                let r = match g.truncate {
                    GroupTruncation::Count(r) => r,
                    GroupTruncation::Auto => {
                        return Err(ReductionError::Selection("automatic truncation needs balancing".into()))
                    }
                };
                if r > g.species.len() {
                    return Err(ReductionError::InvalidTruncation(format!(
                        "cannot truncate {r} of {} states",
                        g.species.len()
                    )));
                }
                truncated.extend(offset + g.species.len() - r..offset + g.species.len());
                r_per_group.push(r);
                offset += g.species.len();
            }
            (DMatrix::identity(k, k), None, vec![], truncated, r_per_group, None)
        }
        TransformMode::Balanced => {
            let zero_r = vec![0; state_groups.len()];
            let probe = PartitionSpec::new(l, state_groups.clone(), zero_r)?;
            let g = solve_structured_gramians(&sys, &probe, &opts.gramian)?;
            let p22 = g.p.view((l, l), (k, k)).into_owned();
            let q22 = g.q.view((l, l), (k, k)).into_owned();
            match opts.gramian.block_mode {
                BlockMode::PerGroup => {
                    let mut t22 = DMatrix::zeros(k, k);
                    let mut balanced = Vec::new();
                    let mut truncated = Vec::new();
                    let mut r_per_group = Vec::new();
                    let mut suggested = 0;
                    let largest = {
                        let mut m = 0.0_f64;
                        for idx in &state_groups {
                            let local: Vec<usize> = idx.iter().map(|i| i - l).collect();
                            let b = balance_block(&submatrix(&p22, &local, &local), &submatrix(&q22, &local, &local))?;
                            m = m.max(b.sigma[0]);
                            balanced.push(b);
                        }
                        m
                    };
                    let cut = opts.threshold.cutoff(largest);
                    let mut offset = 0;
                    for (grp, b) in all_groups.iter().zip(&balanced) {
                        let size = grp.species.len();
                        let below = b.sigma.iter().filter(|&&s| s < cut).count();
                        suggested += below;
                        let r = match grp.truncate {
                            GroupTruncation::Count(r) => r,
                            GroupTruncation::Auto => below,
                        };
                        if r > size {
                            return Err(ReductionError::InvalidTruncation(format!(
                                "cannot truncate {r} of {size} states"
                            )));
                        }
                        t22.view_mut((offset, offset), (size, size)).copy_from(&b.t22);
                        truncated.extend(offset + size - r..offset + size);
                        r_per_group.push(r);
                        offset += size;
                    }
                    (t22, Some(g), balanced, truncated, r_per_group, Some(suggested))
                }
                BlockMode::Two => {
                    let b = balance_block(&p22, &q22)?;
                    let order_info = truncation_order(b.sigma.as_slice(), opts.threshold);
                    let total = if all_groups.iter().any(|g| g.truncate == GroupTruncation::Auto) {
                        order_info.suggested_r
                    } else {
                        all_groups
                            .iter()
                            .map(|g| match g.truncate {
                                GroupTruncation::Count(r) => r,
                                GroupTruncation::Auto => 0,
                            })
                            .sum()
                    };
                    if total > k {
                        return Err(ReductionError::InvalidTruncation(format!("r = {total} exceeds k = {k}")));
                    }
                    let truncated: Vec<usize> = (k - total..k).collect();
                    (b.t22.clone(), Some(g), vec![b], truncated, vec![], Some(order_info.suggested_r))
                }
            }
        }
    };

    let partition = if state_groups.is_empty() {
        PartitionSpec::new(l, vec![], vec![])?
    } else if opts.gramian.block_mode == BlockMode::Two && opts.transform == TransformMode::Balanced {
        PartitionSpec::new(l, vec![(l..l + k).collect()], vec![truncated.len()])?
    } else {
        PartitionSpec::new(l, state_groups, r_per_group)?
    };
    let projectors = ProjectorSet::from_transform(l, &t22, &truncated)?;
    ReducedModel::new(
        ReductionMethod::Structured,
        net,
        order,
        projectors,
        x_ss.clone(),
        gramians,
        Some(partition),
        balanced,
        suggested,
    )
}

/// Time-scale-separation baseline: the `fast` species are eliminated by
/// their quasi-steady-state constraint.
///
/// States are ordered as `retained`, the remaining slow species in
/// declaration order, then `fast`. The fast block of the drift matrix must
/// be Hurwitz at `x_ss`.
pub fn reduce_averaging(
    net: &ReactionNetwork,
    x_ss: &DVector<f64>,
    retained: &[usize],
    fast: &[usize],
) -> Result<ReducedModel, ReductionError> {
    let n = net.species().len();
    check_species(n, &[retained, fast])?;
    if retained.is_empty() {
        return Err(ReductionError::Selection("at least one species must be retained".into()));
    }
    let mut order = retained.to_vec();
    order.extend((0..n).filter(|i| !retained.contains(i) && !fast.contains(i)));
    order.extend(fast);
    let nf = fast.len();
    let sys = linearize_with_order(net, x_ss, &order, retained.len())?;
    if nf > 0 {
        let jff = sys.a.view((n - nf, n - nf), (nf, nf)).into_owned();
        let abscissa = spectral_abscissa(&jff);
        if !(abscissa < 0.0) {
            return Err(ReductionError::FastNotHurwitz { abscissa });
        }
    }
    let identity = BalancedBlock::identity(n - retained.len());
    let k = n - retained.len();
    let truncated: Vec<usize> = (k - nf..k).collect();
    let projectors = ProjectorSet::from_transform(retained.len(), &identity.t22, &truncated)?;
    ReducedModel::new(ReductionMethod::Averaging, net, order, projectors, x_ss.clone(), None, None, vec![], None)
}

/// Reduced fluctuation system from the block formula
/// `J_ss − J_sf J_ff⁻¹ J_fs`, `(S_s − J_sf J_ff⁻¹ S_f) Ω^{-1/2} F`, taking
/// the last `n_fast` states of `sys` as fast.
pub fn averaged_fluctuation_system(
    sys: &LinearFluctuationSystem,
    n_fast: usize,
) -> Result<ReducedLinearSystem, ReductionError> {
    let n = sys.n();
    if n_fast > sys.k {
        return Err(ReductionError::InvalidTruncation(format!("{n_fast} fast states but only {} reducible", sys.k)));
    }
    let ns = n - n_fast;
    let jss = sys.a.view((0, 0), (ns, ns)).into_owned();
    let c = sys.c.columns(0, ns).into_owned();
    let bs = sys.b.rows(0, ns).into_owned();
    if n_fast == 0 {
        return Ok(ReducedLinearSystem { a: jss, b: bs, c });
    }
    let jsf = sys.a.view((0, ns), (ns, n_fast));
    let jfs = sys.a.view((ns, 0), (n_fast, ns));
    let jff = sys.a.view((ns, ns), (n_fast, n_fast)).into_owned();
    let abscissa = spectral_abscissa(&jff);
    if !(abscissa < 0.0) {
        return Err(ReductionError::FastNotHurwitz { abscissa });
    }
    let jff_inv = jff.try_inverse().ok_or(ReductionError::FastNotHurwitz { abscissa })?;
    let k = jsf * jff_inv;
    let a = jss - &k * jfs;
    let b = bs - &k * sys.b.rows(ns, n_fast);
    Ok(ReducedLinearSystem { a, b, c })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_block_formula() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let sys = LinearFluctuationSystem::from_matrices(a, b, 1).unwrap();
        let red = averaged_fluctuation_system(&sys, 1).unwrap();
        assert!((red.a[(0, 0)] + 0.5).abs() < 1e-15);
        assert_eq!(red.b[(0, 0)], 1.0);
    }

    #[test]
    fn decoupled_block_formula() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 3.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let sys = LinearFluctuationSystem::from_matrices(a, b, 1).unwrap();
        let red = averaged_fluctuation_system(&sys, 1).unwrap();
        assert_eq!(red.a[(0, 0)], -1.0);
        assert_eq!(red.b.row(0).into_owned(), sys.b.row(0).into_owned());
    }
}
