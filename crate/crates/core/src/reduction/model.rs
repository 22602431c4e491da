use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::balance::BalancedBlock;
use super::projectors::ProjectorSet;
use super::ReductionError;
use crate::gramians::{PartitionSpec, StructuredGramians};
use crate::lna::ode::{integrate_ode, OdeOptions};
use crate::lna::{
    integrate_lyapunov_ode, jacobian_j, noise_input, span_of, uniform_times, CovTrajectory, Trajectory,
};
use crate::netparse::ReactionNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionMethod {
    Structured,
    Averaging,
}

impl ReductionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ReductionMethod::Structured => "structured",
            ReductionMethod::Averaging => "averaging",
        }
    }
}

/// Reduced LTI fluctuation model `ν̇ = A ν + B Γ`, `y = C ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

/// Petrov–Galerkin reduced model of a reaction network.
///
/// The kept coordinates `z_m` evolve by `ż_m = Vᵀ S f(W z_m + W_r z_r)` and
/// the truncated ones are algebraic, `0 = V_rᵀ S f(W z_m + W_r z_r)`. All
/// matrices act on the species ordering `order` (retained species first).
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub method: ReductionMethod,
    base: ReactionNetwork,
    /// The base network with species reordered by `order`.
    permuted: ReactionNetwork,
    order: Vec<usize>,
    pub projectors: ProjectorSet,
    /// Steady state of the base network (base ordering).
    pub x_ss: DVector<f64>,
    pub gramians: Option<StructuredGramians>,
    pub partition: Option<PartitionSpec>,
    /// Balanced block of every lumped group (structured method only).
    pub balanced: Vec<BalancedBlock>,
    /// Truncation count suggested by the threshold rule.
    pub suggested_r: Option<usize>,
}

/// Outputs and covariance of a reduced simulation.
#[derive(Debug, Clone)]
pub struct ReducedSimulation {
    /// `y = C(W z_m + W_r z_r)` at the requested times.
    pub outputs: Trajectory,
    /// Kept coordinates `z_m`.
    pub states: Trajectory,
    /// Output covariance `C_r X_m C_rᵀ`.
    pub output_cov: CovTrajectory,
    /// Largest `‖V_rᵀ S f‖∞` over all solved constraint evaluations.
    pub max_algebraic_residual: f64,
}

impl ReducedModel {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        method: ReductionMethod,
        base: &ReactionNetwork,
        order: Vec<usize>,
        projectors: ProjectorSet,
        x_ss: DVector<f64>,
        gramians: Option<StructuredGramians>,
        partition: Option<PartitionSpec>,
        balanced: Vec<BalancedBlock>,
        suggested_r: Option<usize>,
    ) -> Result<Self, ReductionError> {
        let permuted = base.permute_species(&order)?;
        let rm = ReducedModel {
            method,
            base: base.clone(),
            permuted,
            order,
            projectors,
            x_ss,
            gramians,
            partition,
            balanced,
            suggested_r,
        };
        let res = rm.constraint(&rm.permuted_state(&rm.x_ss))?;
        let scale = 1.0 + rm.base.eval_rates(&rm.x_ss)?.amax();
        if res.amax() > 1e-9 * scale {
            return Err(ReductionError::NewtonFailed { residual: res.amax() });
        }
        Ok(rm)
    }

    pub fn base(&self) -> &ReactionNetwork {
        &self.base
    }

    /// `order[i]` is the base-network index of state `i`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn l(&self) -> usize {
        self.projectors.l
    }

    /// Number of algebraic variables.
    pub fn r(&self) -> usize {
        self.projectors.r
    }

    /// Number of differential variables.
    pub fn dim(&self) -> usize {
        self.projectors.dim()
    }

    pub fn output_names(&self) -> Vec<String> {
        let names = self.base.species();
        self.order[..self.l()].iter().map(|&i| names[i].clone()).collect()
    }

    /// Output indices in the base network.
    pub fn output_indices(&self) -> &[usize] {
        &self.order[..self.l()]
    }

    /// Reduced stoichiometry `S_r = Vᵀ S` (permuted species).
    pub fn reduced_stoichiometry(&self) -> DMatrix<f64> {
        self.projectors.v.transpose() * self.permuted.stoichiometry()
    }

    /// `C_r = C W`.
    pub fn output_matrix(&self) -> DMatrix<f64> {
        self.projectors.w.rows(0, self.l()).into_owned()
    }

    /// Base-ordering state into the permuted ordering.
    pub fn permuted_state(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.order.len(), |i, _| x[self.order[i]])
    }

    /// Permuted-ordering state back into the base ordering.
    pub fn base_state(&self, xp: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(xp.len());
        for (i, &o) in self.order.iter().enumerate() {
            x[o] = xp[i];
        }
        x
    }

    /// `W z_m + W_r z_r` in the permuted ordering.
    pub fn lift(&self, zm: &DVector<f64>, zr: &DVector<f64>) -> DVector<f64> {
        let p = &self.projectors;
        if p.r == 0 {
            &p.w * zm
        } else {
            &p.w * zm + &p.w_r * zr
        }
    }

    /// `(Vᵀ x_ss, V_rᵀ x_ss)`, the reduced coordinates of the full steady state.
    pub fn steady_coordinates(&self) -> (DVector<f64>, DVector<f64>) {
        let xp = self.permuted_state(&self.x_ss);
        (self.projectors.v.transpose() * &xp, self.projectors.v_r.transpose() * &xp)
    }

    fn constraint(&self, xp: &DVector<f64>) -> Result<DVector<f64>, ReductionError> {
        let f = self.permuted.eval_rates(xp)?;
        Ok(self.projectors.v_r.transpose() * (self.permuted.stoichiometry() * f))
    }

    /// Solves `V_rᵀ S f(W z_m + W_r z_r) = 0` for `z_r` by damped Newton.
    /// Returns `z_r` and the final residual `‖·‖∞`.
    pub fn solve_algebraic(&self, zm: &DVector<f64>, guess: &DVector<f64>) -> Result<(DVector<f64>, f64), ReductionError> {
        let r = self.r();
        if r == 0 {
            return Ok((DVector::zeros(0), 0.0));
        }
        let p = &self.projectors;
        let mut zr = guess.clone();
        let mut xp = self.lift(zm, &zr);
        let mut g = self.constraint(&xp)?;
        for _ in 0..50 {
            let scale = 1.0 + self.permuted.eval_rates(&xp)?.amax();
            let res = g.amax();
            if res <= 1e-12 * scale {
                return Ok((zr, res));
            }
            let jac = jacobian_j(&self.permuted, &xp)?;
            let gj = p.v_r.transpose() * jac * &p.w_r;
            let sv = gj.singular_values();
            let cond = sv.max() / sv.min();
            if !(cond < 1e12) {
                return Err(ReductionError::SingularAlgebraic { cond });
            }
            let dz = gj.lu().solve(&(-&g)).ok_or(ReductionError::SingularAlgebraic { cond: f64::INFINITY })?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = &zr + &dz * lambda;
                let xc = self.lift(zm, &cand);
                if let Ok(gc) = self.constraint(&xc) {
                    if gc.norm() < g.norm() {
                        zr = cand;
                        xp = xc;
                        g = gc;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let scale = 1.0 + self.permuted.eval_rates(&xp)?.amax();
        if g.amax() <= 1e-10 * scale {
            Ok((zr, g.amax()))
        } else {
            Err(ReductionError::NewtonFailed { residual: g.amax() })
        }
    }

    /// `ż_m` at `(z_m, z_r)`.
    pub fn vector_field(&self, zm: &DVector<f64>, zr: &DVector<f64>) -> Result<DVector<f64>, ReductionError> {
        let xp = self.lift(zm, zr);
        let f = self.permuted.eval_rates(&xp)?;
        Ok(self.projectors.v.transpose() * (self.permuted.stoichiometry() * f))
    }

    /// Drift and noise input of the reduced fluctuations at `(z_m, z_r)`.
    ///
    /// The algebraic fluctuations are eliminated through the constraint's
    /// linearization: with `A_mm = Vᵀ J W`, `A_mr = Vᵀ J W_r`,
    /// `A_rm = V_rᵀ J W`, `A_rr = V_rᵀ J W_r` and `K = A_mr A_rr⁻¹`,
    /// `J_r = A_mm − K A_rm` and `B_r = (Vᵀ − K V_rᵀ) Ω^{-1/2} S F`.
    pub fn drift_and_noise(
        &self,
        zm: &DVector<f64>,
        zr: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>), ReductionError> {
        let p = &self.projectors;
        let xp = self.lift(zm, zr);
        let j = jacobian_j(&self.permuted, &xp)?;
        let b = noise_input(&self.permuted, &xp)?;
        let vt = p.v.transpose();
        let amm = &vt * &j * &p.w;
        if p.r == 0 {
            return Ok((amm, vt * b));
        }
        let vrt = p.v_r.transpose();
        let amr = &vt * &j * &p.w_r;
        let arm = &vrt * &j * &p.w;
        let arr = &vrt * &j * &p.w_r;
        let arr_inv = arr.try_inverse().ok_or(ReductionError::SingularAlgebraic { cond: f64::INFINITY })?;
        let k = amr * arr_inv;
        let jr = amm - &k * arm;
        let br = (vt - &k * vrt) * b;
        Ok((jr, br))
    }

    /// Reduced LTI fluctuation model at the steady state.
    pub fn linearized(&self) -> Result<ReducedLinearSystem, ReductionError> {
        let (zm, zr) = self.steady_coordinates();
        let (a, b) = self.drift_and_noise(&zm, &zr)?;
        Ok(ReducedLinearSystem { a, b, c: self.output_matrix() })
    }

    /// `(z_m(0), z_r(0))` for a base-ordering initial state: `z_m = Vᵀ x0`,
    /// `z_r` solved from the constraint starting at `V_rᵀ x0`.
    pub fn initial_coordinates(&self, x0: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>), ReductionError> {
        let xp = self.permuted_state(x0);
        let zm = self.projectors.v.transpose() * &xp;
        let guess = self.projectors.v_r.transpose() * &xp;
        let (zr, _) = self.solve_algebraic(&zm, &guess)?;
        Ok((zm, zr))
    }

    /// Human-readable summary of the reduced model.
    pub fn describe(&self) -> Result<String, ReductionError> {
        let mut s = String::new();
        let names = self.base.species();
        let ordered: Vec<&str> = self.order.iter().map(|&i| names[i].as_str()).collect();
        let _ = writeln!(s, "method: {}", self.method.name());
        let _ = writeln!(s, "state order: {}", ordered.join(" "));
        let _ = writeln!(s, "outputs: {}", self.output_names().join(" "));
        let _ = writeln!(s, "full dimension: {}", self.order.len());
        let _ = writeln!(s, "differential dimension: {}", self.dim());
        let _ = writeln!(s, "algebraic dimension: {}", self.r());
        if let Some(part) = &self.partition {
            for (g, r) in part.groups().iter().zip(part.r_per_group()) {
                let members: Vec<&str> = g.iter().map(|&i| ordered[i]).collect();
                let _ = writeln!(s, "group {{{}}} truncated by {r}", members.join(", "));
            }
        }
        for (i, b) in self.balanced.iter().enumerate() {
            let sig: Vec<String> = b.sigma.iter().map(|v| format!("{v:.6e}")).collect();
            let _ = writeln!(s, "sigma22[group {}]: {}", i + 1, sig.join(" "));
        }
        if let Some(r) = self.suggested_r {
            let _ = writeln!(s, "suggested r: {r}");
        }
        let _ = writeln!(s, "biorthogonality error: {:.3e}", self.projectors.biorthogonality_error());
        let lin = self.linearized()?;
        for (name, m) in [
            ("W", &self.projectors.w),
            ("V", &self.projectors.v),
            ("W_r", &self.projectors.w_r),
            ("V_r", &self.projectors.v_r),
            ("S_r", &self.reduced_stoichiometry()),
            ("J_r", &lin.a),
            ("B_r", &lin.b),
            ("C_r", &lin.c),
        ] {
            let _ = writeln!(s, "{name} ({}x{}):", m.nrows(), m.ncols());
            for row in m.row_iter() {
                let vals: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
                let _ = writeln!(s, "  {}", vals.join(" "));
            }
        }
        Ok(s)
    }
}

/// Integrates the reduced model from the base-ordering state `x0`.
///
/// The constraint is re-solved at every right-hand-side evaluation, warm
/// started from the previous solution. The output covariance starts from
/// zero and uses the reduced drift and noise along the trajectory.
pub fn simulate_reduced(
    rm: &ReducedModel,
    x0: &DVector<f64>,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<ReducedSimulation, ReductionError> {
    let span = span_of(times)?;
    let (zm0, zr0) = rm.initial_coordinates(x0)?;
    let mut max_res = 0.0_f64;

    let mut warm = zr0.clone();
    let mut run = |grid: &[f64], max_res: &mut f64| -> Result<Trajectory, ReductionError> {
        warm = zr0.clone();
        let tr = integrate_ode(
            |_, zm: &DVector<f64>| -> Result<DVector<f64>, ReductionError> {
                let (zr, res) = rm.solve_algebraic(zm, &warm)?;
                *max_res = max_res.max(res);
                warm = zr;
                rm.vector_field(zm, &warm)
            },
            &zm0,
            span,
            grid,
            opts,
        )?;
        Ok(tr)
    };
    let states = run(times, &mut max_res)?;
    let dense_times = crate::lna::merge_grid(&uniform_times(span.0, span.1, 4001), times);
    let dense = run(&dense_times, &mut max_res)?;

    // The retained rows of W are [I 0] and those of W_r vanish, so the
    // outputs are the first l kept coordinates. The constraint is still
    // re-solved at every sample to report its residual.
    let mut zr = zr0.clone();
    for i in 0..states.len() {
        let (z, res) = rm.solve_algebraic(&states.state(i), &zr)?;
        max_res = max_res.max(res);
        zr = z;
    }
    let out_cols: Vec<usize> = (0..rm.l()).collect();
    let outputs = states.select(&out_cols).with_labels(rm.output_names());

    let ip = dense.interpolator();
    let mut zr_cov = zr0.clone();
    let nm = rm.dim();
    let cov = integrate_lyapunov_ode(&DMatrix::zeros(nm, nm), times, opts, |t| {
        let zm = ip.eval(t);
        let (z, _) = rm.solve_algebraic(&zm, &zr_cov).map_err(|e| crate::lna::LnaError::InvalidInput(e.to_string()))?;
        zr_cov = z;
        let (j, b) = rm.drift_and_noise(&zm, &zr_cov).map_err(|e| crate::lna::LnaError::InvalidInput(e.to_string()))?;
        let d = &b * b.transpose();
        Ok((j, d))
    })?;
    let output_cov = cov.project(&rm.output_matrix());
    let labels: Vec<String> = (1..=nm).map(|i| format!("z{i}")).collect();
    Ok(ReducedSimulation {
        outputs,
        states: states.with_labels(labels),
        output_cov,
        max_algebraic_residual: max_res,
    })
}
