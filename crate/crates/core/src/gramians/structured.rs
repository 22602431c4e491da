use nalgebra::{DMatrix, DVector};

use super::barrier::{path_following, BarrierOptions, Lmi, Stop};
use super::metzler::{diagonal_candidate, is_metzler};
use super::{GramianError, GramianKind};
use crate::linalg::{spectral_abscissa, submatrix, sym_lambda_max, sym_lambda_min, sym_norm2};
use crate::lna::LinearFluctuationSystem;

/// Which block pattern the Gramians are constrained to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockMode {
    /// One retained block and one reducible block.
    Two,
    /// One retained block and one block per lumped group.
    #[default]
    PerGroup,
}

/// Retained block size and the lumped groups of the reducible states.
///
/// Group entries are state indices of the linearized system, so they lie in
/// `l..l+k`. `r_per_group[g]` states are truncated from group `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    l: usize,
    groups: Vec<Vec<usize>>,
    r_per_group: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(l: usize, groups: Vec<Vec<usize>>, r_per_group: Vec<usize>) -> Result<Self, GramianError> {
        if l == 0 {
            return Err(GramianError::Partition("the retained block must be nonempty".into()));
        }
        if groups.len() != r_per_group.len() {
            return Err(GramianError::Partition("one truncation count per group is required".into()));
        }
        let k: usize = groups.iter().map(Vec::len).sum();
        let mut seen = vec![false; k];
        for g in &groups {
            if g.is_empty() {
                return Err(GramianError::Partition("empty group".into()));
            }
            for &i in g {
                if i < l || i >= l + k || std::mem::replace(&mut seen[i - l], true) {
                    return Err(GramianError::Partition(format!(
                        "groups must partition the reducible indices {l}..{}",
                        l + k
                    )));
                }
            }
        }
        for (g, &r) in groups.iter().zip(&r_per_group) {
            if r > g.len() {
                return Err(GramianError::Partition(format!("cannot truncate {r} states from a group of {}", g.len())));
            }
        }
        Ok(PartitionSpec { l, groups, r_per_group })
    }

    /// A single reducible group `l..l+k` truncated by `r`.
    pub fn two_block(l: usize, k: usize, r: usize) -> Result<Self, GramianError> {
        if k == 0 {
            return PartitionSpec::new(l, vec![], vec![]).and_then(|p| {
                if r == 0 {
                    Ok(p)
                } else {
                    Err(GramianError::Partition("nothing to truncate".into()))
                }
            });
        }
        PartitionSpec::new(l, vec![(l..l + k).collect()], vec![r])
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn k(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn n(&self) -> usize {
        self.l + self.k()
    }

    pub fn r(&self) -> usize {
        self.r_per_group.iter().sum()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn r_per_group(&self) -> &[usize] {
        &self.r_per_group
    }

    pub fn structure(&self, mode: BlockMode) -> GramianStructure {
        let mut blocks = vec![(0..self.l).collect::<Vec<_>>()];
        match mode {
            BlockMode::Two if self.k() > 0 => blocks.push((self.l..self.n()).collect()),
            BlockMode::Two => {}
            BlockMode::PerGroup => blocks.extend(self.groups.iter().cloned()),
        }
        GramianStructure { n: self.n(), blocks }
    }
}

/// Block-diagonal sparsity pattern: each block is a set of indices whose
/// mutual entries are free, all other off-diagonal entries are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GramianStructure {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl GramianStructure {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, GramianError> {
        let mut seen = vec![false; n];
        for &i in blocks.iter().flatten() {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(GramianError::Partition("blocks must partition 0..n".into()));
            }
        }
        if seen.iter().any(|s| !s) || blocks.iter().any(Vec::is_empty) {
            return Err(GramianError::Partition("blocks must partition 0..n".into()));
        }
        Ok(GramianStructure { n, blocks })
    }

    pub fn diagonal(n: usize) -> Self {
        GramianStructure { n, blocks: (0..n).map(|i| vec![i]).collect() }
    }

    pub fn full(n: usize) -> Self {
        GramianStructure { n, blocks: vec![(0..n).collect()] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Whether `m` has no nonzero entry outside the blocks.
    pub fn admits(&self, m: &DMatrix<f64>) -> bool {
        let mut block_of = vec![0; self.n];
        for (b, idx) in self.blocks.iter().enumerate() {
            for &i in idx {
                block_of[i] = b;
            }
        }
        (0..self.n).all(|i| (0..self.n).all(|j| block_of[i] == block_of[j] || m[(i, j)] == 0.0))
    }

    /// Symmetric basis matrices `e_i e_jᵀ + e_j e_iᵀ` (or `e_i e_iᵀ`) per block.
    fn basis(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for idx in &self.blocks {
            for (a, &i) in idx.iter().enumerate() {
                for &j in &idx[a..] {
                    out.push((i.min(j), i.max(j)));
                }
            }
        }
        out
    }
}

fn basis_matrix(n: usize, (i, j): (usize, usize)) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

/// How a Gramian was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramianMethod {
    MetzlerDiagonal,
    Barrier,
}

#[derive(Debug, Clone)]
pub struct GramianOptions {
    pub block_mode: BlockMode,
    /// Try the closed-form diagonal Gramian when the drift matrix is Metzler.
    pub use_metzler: bool,
    pub barrier: BarrierOptions,
}

impl Default for GramianOptions {
    fn default() -> Self {
        GramianOptions { block_mode: BlockMode::default(), use_metzler: true, barrier: BarrierOptions::default() }
    }
}

/// Block-diagonal solutions of the two Lyapunov inequalities.
#[derive(Debug, Clone)]
pub struct StructuredGramians {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// `-λ_max(A P + P Aᵀ + B Bᵀ)`.
    pub gamma_p: f64,
    /// `-λ_max(Q A + Aᵀ Q + Cᵀ C)`.
    pub gamma_q: f64,
    pub structure: GramianStructure,
    pub p_method: GramianMethod,
    pub q_method: GramianMethod,
}

/// `λ_max(A P + P Aᵀ + M)`.
pub fn inequality_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let ap = a * p;
    sym_lambda_max(&(&ap + ap.transpose() + m))
}

/// Minimum-trace `P` with the given structure and `A P + P Aᵀ + M ⪯ 0`.
///
/// The problem is normalized by `‖A‖` and `‖M‖₂`. A phase-1 problem
/// minimizes the slack `s` in `A P + P Aᵀ + M ⪯ sI` (with a trace cap to
/// keep it bounded); a negative slack gives a strictly feasible start for
/// the trace minimization.
pub fn solve_structured_lmi(
    a: &DMatrix<f64>,
    m: &DMatrix<f64>,
    structure: &GramianStructure,
    opts: &BarrierOptions,
    which: GramianKind,
) -> Result<DMatrix<f64>, GramianError> {
    let n = a.nrows();
    if !a.is_square() || m.shape() != (n, n) || structure.n() != n {
        return Err(GramianError::Dimension("A, the forcing term and the structure must agree".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let abscissa = spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(GramianError::NotHurwitz { abscissa });
    }
    let a_scale = a.norm();
    let m_scale = match sym_norm2(m) {
        v if v > 0.0 => v,
        _ => 1.0,
    };
    let ah = a / a_scale;
    let mh = m / m_scale;
    let eps = 1e-8;
    let basis = structure.basis();
    let nv = basis.len();
    let mats: Vec<DMatrix<f64>> = basis.iter().map(|&ij| basis_matrix(n, ij)).collect();
    let traces: Vec<f64> = basis.iter().map(|&(i, j)| if i == j { 1.0 } else { 0.0 }).collect();

    let main = Lmi { f0: -&mh, fa: mats.iter().map(|e| -(&ah * e + e * ah.transpose())).collect() };
    let block_lmis: Vec<Lmi> = structure
        .blocks()
        .iter()
        .map(|idx| Lmi {
            f0: -DMatrix::identity(idx.len(), idx.len()) * eps,
            fa: mats.iter().map(|e| submatrix(e, idx, idx)).collect(),
        })
        .collect();

    // Phase 1 in (x, s).
    let cap = 1e8 * n as f64;
    let mut lmis1 = Vec::with_capacity(block_lmis.len() + 2);
    let mut main1 = main.clone();
    main1.fa.push(DMatrix::identity(n, n));
    lmis1.push(main1);
    for l in &block_lmis {
        let mut l1 = l.clone();
        l1.fa.push(DMatrix::zeros(l.f0.nrows(), l.f0.nrows()));
        lmis1.push(l1);
    }
    let mut cap_fa: Vec<DMatrix<f64>> = traces.iter().map(|t| DMatrix::from_element(1, 1, -t)).collect();
    cap_fa.push(DMatrix::zeros(1, 1));
    lmis1.push(Lmi { f0: DMatrix::from_element(1, 1, cap), fa: cap_fa });

    let mut x0 = DVector::zeros(nv + 1);
    for (v, t) in traces.iter().enumerate() {
        x0[v] = *t;
    }
    x0[nv] = sym_lambda_max(&(&ah + ah.transpose() + &mh)) + 1.0;
    let mut c1 = DVector::zeros(nv + 1);
    c1[nv] = 1.0;
    let phase1 = path_following(&c1, &lmis1, x0, opts, |x, gap| {
        let s = x[nv];
        if s < -1e-6 {
            Some(Stop::Early)
        } else if s - gap > 0.0 || gap <= 1e-12 {
            Some(Stop::Converged)
        } else {
            None
        }
    })
    .map_err(|e| GramianError::Numerical(format!("{which} phase 1: {e}")))?;
    let slack = phase1.x[nv];
    if slack >= 0.0 {
        return Err(GramianError::Infeasible { which, slack: slack * m_scale });
    }

    // Phase 2: minimize the trace.
    let mut lmis2 = vec![main];
    lmis2.extend(block_lmis);
    let c2 = DVector::from_vec(traces);
    let start = phase1.x.rows(0, nv).into_owned();
    let phase2 = path_following(&c2, &lmis2, start, opts, |x, gap| {
        (gap <= opts.rel_gap * c2.dot(x)).then_some(Stop::Converged)
    })
    .map_err(|e| GramianError::Numerical(format!("{which} trace minimization: {e}")))?;

    let mut p = DMatrix::zeros(n, n);
    for (&(i, j), v) in basis.iter().zip(phase2.x.iter()) {
        p[(i, j)] = *v;
        p[(j, i)] = *v;
    }
    p *= m_scale / a_scale;
    let resid = inequality_residual(a, &p, m);
    if resid > 1e-8 * sym_norm2(m) || !(sym_lambda_min(&p) > 0.0) {
        return Err(GramianError::Numerical(format!(
            "{which}: solution fails verification (λ_max residual {resid:e})"
        )));
    }
    Ok(p)
}

fn one_gramian(
    a: &DMatrix<f64>,
    m: &DMatrix<f64>,
    structure: &GramianStructure,
    opts: &GramianOptions,
    which: GramianKind,
) -> Result<(DMatrix<f64>, GramianMethod), GramianError> {
    if opts.use_metzler && is_metzler(a) {
        if let Some(p) = diagonal_candidate(a, m) {
            return Ok((p, GramianMethod::MetzlerDiagonal));
        }
    }
    Ok((solve_structured_lmi(a, m, structure, &opts.barrier, which)?, GramianMethod::Barrier))
}

/// Structured `P`, `Q` for the linearized system under `part`'s block pattern.
pub fn solve_structured_gramians(
    sys: &LinearFluctuationSystem,
    part: &PartitionSpec,
    opts: &GramianOptions,
) -> Result<StructuredGramians, GramianError> {
    if part.l() != sys.l || part.n() != sys.n() {
        return Err(GramianError::Partition(format!(
            "partition describes l = {}, n = {} but the system has l = {}, n = {}",
            part.l(),
            part.n(),
            sys.l,
            sys.n()
        )));
    }
    let abscissa = spectral_abscissa(&sys.a);
    if !(abscissa < 0.0) {
        return Err(GramianError::NotHurwitz { abscissa });
    }
    let structure = part.structure(opts.block_mode);
    let bbt = sys.bbt();
    let ctc = sys.ctc();
    let at = sys.a.transpose();
    let (p, q) = rayon::join(
        || one_gramian(&sys.a, &bbt, &structure, opts, GramianKind::P),
        || one_gramian(&at, &ctc, &structure, opts, GramianKind::Q),
    );
    let ((p, p_method), (q, q_method)) = (p?, q?);
    Ok(StructuredGramians {
        gamma_p: -inequality_residual(&sys.a, &p, &bbt),
        gamma_q: -inequality_residual(&at, &q, &ctc),
        p,
        q,
        structure,
        p_method,
        q_method,
    })
}
