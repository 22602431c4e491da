//! Log-det barrier path following for small LMI problems
//! `min cᵀx  s.t.  F_j(x) = F_j0 + Σ_a x_a F_ja ≻ 0`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

#[derive(Debug, Clone)]
pub struct BarrierOptions {
    pub mu_init: f64,
    pub mu_factor: f64,
    /// Newton decrement target `λ²/2`.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    /// Relative duality-gap target for the trace-minimization phase.
    pub rel_gap: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            mu_init: 1.0,
            mu_factor: 0.2,
            newton_tol: 1e-10,
            max_newton: 100,
            max_outer: 200,
            rel_gap: 1e-8,
        }
    }
}

/// One linear matrix inequality `F0 + Σ x_a F_a ≻ 0`.
#[derive(Debug, Clone)]
pub struct Lmi {
    pub f0: DMatrix<f64>,
    pub fa: Vec<DMatrix<f64>>,
}

impl Lmi {
    pub fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut f = self.f0.clone();
        for (xa, fa) in x.iter().zip(&self.fa) {
            if *xa != 0.0 {
                f += fa * *xa;
            }
        }
        f
    }

    fn dim(&self) -> usize {
        self.f0.nrows()
    }
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Duality gap reached the requested bound.
    Converged,
    /// The caller's early-exit test fired.
    Early,
    MaxOuter,
}

#[derive(Debug, Clone)]
pub struct BarrierResult {
    pub x: DVector<f64>,
    pub mu: f64,
    pub outer_iterations: usize,
    pub stop: Stop,
}

fn factor_all(lmis: &[Lmi], x: &DVector<f64>) -> Option<Vec<Cholesky<f64, Dyn>>> {
    lmis.iter().map(|l| Cholesky::new(l.eval(x))).collect()
}

fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

fn objective(c: &DVector<f64>, mu: f64, x: &DVector<f64>, chols: &[Cholesky<f64, Dyn>]) -> f64 {
    c.dot(x) / mu - chols.iter().map(log_det).sum::<f64>()
}

/// Damped-Newton centering of `cᵀx/μ − Σ log det F_j(x)`.
fn center(c: &DVector<f64>, lmis: &[Lmi], x: &mut DVector<f64>, mu: f64, opts: &BarrierOptions) -> bool {
    let m = x.len();
    for _ in 0..opts.max_newton {
        let Some(chols) = factor_all(lmis, x) else { return false };
        let mut grad = c / mu;
        let mut hess = DMatrix::<f64>::zeros(m, m);
        for (lmi, ch) in lmis.iter().zip(&chols) {
            let g: Vec<DMatrix<f64>> = lmi.fa.iter().map(|fa| ch.solve(fa)).collect();
            for a in 0..m {
                grad[a] -= g[a].trace();
                for b in a..m {
                    // tr(G_a G_b) without forming the product.
                    let h = g[a].component_mul(&g[b].transpose()).sum();
                    hess[(a, b)] += h;
                    if a != b {
                        hess[(b, a)] += h;
                    }
                }
            }
        }
        let dx = match Cholesky::new(hess.clone()) {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                let shift = 1e-12 * hess.diagonal().amax().max(1.0);
                match Cholesky::new(hess + DMatrix::identity(m, m) * shift) {
                    Some(ch) => ch.solve(&(-&grad)),
                    None => return false,
                }
            }
        };
        let lam2 = -grad.dot(&dx);
        if !lam2.is_finite() {
            return false;
        }
        if lam2 / 2.0 <= opts.newton_tol {
            return true;
        }
        let lam = lam2.sqrt();
        let mut t = if lam > 0.25 { 1.0 / (1.0 + lam) } else { 1.0 };
        let f0 = objective(c, mu, x, &chols);
        let mut moved = false;
        for _ in 0..60 {
            let cand = &*x + &dx * t;
            if let Some(cc) = factor_all(lmis, &cand) {
                if objective(c, mu, &cand, &cc) <= f0 - 0.25 * t * lam2 {
                    *x = cand;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            // No measurable progress is possible at this precision.
            return true;
        }
    }
    true
}

/// Path following from a strictly feasible `x0`.
///
/// After each centering step `done(x, gap)` is consulted, where `gap` is the
/// duality-gap bound `μ · Σ dim F_j`; returning `Some(stop)` ends the loop.
pub fn path_following<D>(
    c: &DVector<f64>,
    lmis: &[Lmi],
    x0: DVector<f64>,
    opts: &BarrierOptions,
    mut done: D,
) -> Result<BarrierResult, String>
where
    D: FnMut(&DVector<f64>, f64) -> Option<Stop>,
{
    if factor_all(lmis, &x0).is_none() {
        return Err("starting point is not strictly feasible".into());
    }
    let total_dim: usize = lmis.iter().map(Lmi::dim).sum();
    let mut x = x0;
    let mut mu = opts.mu_init;
    for outer in 1..=opts.max_outer {
        if !center(c, lmis, &mut x, mu, opts) {
            return Err(format!("Newton centering failed at mu = {mu:e}"));
        }
        if let Some(stop) = done(&x, mu * total_dim as f64) {
            return Ok(BarrierResult { x, mu, outer_iterations: outer, stop });
        }
        mu *= opts.mu_factor;
    }
    Ok(BarrierResult { x, mu, outer_iterations: opts.max_outer, stop: Stop::MaxOuter })
}
