//! Signal norms of output errors and covariance discrepancies between a
//! full model and a reduced one.

use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::spectral_abscissa;
use crate::lna::{
    jacobian_j, simulate_lna, uniform_times, CovMode, CovTrajectory, LnaError, OdeOptions, Trajectory,
};
use crate::netparse::{KineticModel, ReactionNetwork};
use crate::reduction::{simulate_reduced, ReducedModel, ReductionError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Lna(#[from] LnaError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

/// `L1 = ∫|u|₁`, `L2 = (∫|u|₂²)^{1/2}`, `L∞ = max |u|∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl SignalNorms {
    pub const ZERO: SignalNorms = SignalNorms { l1: 0.0, l2: 0.0, linf: 0.0 };

    fn close_to(&self, other: &SignalNorms, rel: f64) -> bool {
        let near = |a: f64, b: f64| (a - b).abs() <= rel * a.abs().max(b.abs()) || (a - b).abs() <= 1e-300;
        near(self.l1, other.l1) && near(self.l2, other.l2) && near(self.linf, other.linf)
    }
}

/// Trapezoid-rule norms of samples `values[i]` at `times[i]`.
pub fn norms_on_grid(times: &[f64], values: &[DVector<f64>]) -> Result<SignalNorms, MetricsError> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(MetricsError::Dimension("need matching times and values (at least two)".into()));
    }
    let (mut l1, mut l2sq, mut linf) = (0.0, 0.0, 0.0_f64);
    for (i, v) in values.iter().enumerate() {
        linf = linf.max(v.amax());
        if i > 0 {
            let h = times[i] - times[i - 1];
            let u = &values[i - 1];
            l1 += 0.5 * h * (u.lp_norm(1) + v.lp_norm(1));
            l2sq += 0.5 * h * (u.norm_squared() + v.norm_squared());
        }
    }
    Ok(SignalNorms { l1, l2: l2sq.sqrt(), linf })
}

/// Norms of `u` on `[t0, t1]`, doubling a uniform grid (starting from
/// `n0` points) until no norm changes by more than 0.1%. Returns the norms
/// and the number of samples used.
pub fn adaptive_norms<F>(u: F, t0: f64, t1: f64, n0: usize) -> Result<(SignalNorms, usize), MetricsError>
where
    F: Fn(f64) -> DVector<f64>,
{
    if !(t1 > t0) {
        return Err(MetricsError::Dimension("empty time interval".into()));
    }
    let eval = |n: usize| {
        let ts = uniform_times(t0, t1, n);
        let vs: Vec<DVector<f64>> = ts.iter().map(|&t| u(t)).collect();
        norms_on_grid(&ts, &vs)
    };
    let mut n = n0.max(3);
    let mut prev = eval(n)?;
    loop {
        let next_n = 2 * n - 1;
        let next = eval(next_n)?;
        if next.close_to(&prev, 1e-3) || next_n > (1 << 22) {
            return Ok((next, next_n));
        }
        prev = next;
        n = next_n;
    }
}

/// Norms of an error trajectory, refined on its cubic interpolant.
pub fn signal_norms(err: &Trajectory) -> Result<SignalNorms, MetricsError> {
    let ts = err.times();
    if ts.len() < 2 {
        return Err(MetricsError::Dimension("error trajectory needs at least two samples".into()));
    }
    let ip = err.interpolator();
    Ok(adaptive_norms(|t| ip.eval(t), ts[0], ts[ts.len() - 1], ts.len())?.0)
}

/// Frobenius error between output covariances at every common time, and
/// its value at the final time.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceError {
    pub times: Vec<f64>,
    pub traj: Vec<f64>,
    pub ss: f64,
}

/// Compares `c_full X cᵀ_full` with `c_red X_r cᵀ_red` pointwise.
pub fn covariance_error(
    full: &CovTrajectory,
    reduced: &CovTrajectory,
    c_full: &DMatrix<f64>,
    c_red: &DMatrix<f64>,
) -> Result<CovarianceError, MetricsError> {
    if full.times() != reduced.times() || full.is_empty() {
        return Err(MetricsError::Dimension("covariance trajectories must share a non-empty time grid".into()));
    }
    let shapes_ok = c_full.nrows() == c_red.nrows()
        && full.covariances()[0].nrows() == c_full.ncols()
        && reduced.covariances()[0].nrows() == c_red.ncols();
    if !shapes_ok {
        return Err(MetricsError::Dimension("output maps do not match the covariance sizes".into()));
    }
    let traj: Vec<f64> = full
        .covariances()
        .iter()
        .zip(reduced.covariances())
        .map(|(x, xr)| (c_full * x * c_full.transpose() - c_red * xr * c_red.transpose()).norm())
        .collect();
    Ok(CovarianceError { times: full.times().to_vec(), ss: *traj.last().unwrap(), traj })
}

/// Horizon long enough for the slowest mode of `J(x_ss)` to decay from
/// `scale` to `atol`, and at least `20/|α|`.
pub fn suggested_horizon<M: KineticModel + ?Sized>(
    model: &M,
    x_ss: &DVector<f64>,
    scale: f64,
    atol: f64,
) -> Result<f64, MetricsError> {
    let alpha = spectral_abscissa(&jacobian_j(model, x_ss)?);
    if !(alpha < 0.0) {
        return Err(LnaError::NotHurwitz { abscissa: alpha }.into());
    }
    let decades = (scale.max(atol) / atol).ln();
    Ok((20.0_f64).max(decades) / -alpha)
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    /// Final time; `None` uses [`suggested_horizon`].
    pub t_end: Option<f64>,
    pub ode: OdeOptions,
    /// Reported samples (the norms refine beyond this).
    pub n_samples: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { t_end: None, ode: OdeOptions::default(), n_samples: 2001 }
    }
}

/// Output errors of a reduced model against its full network.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub method: String,
    pub partition: String,
    pub r: usize,
    pub t_span: (f64, f64),
    pub rtol: f64,
    pub atol: f64,
    pub omega: f64,
    pub norms: SignalNorms,
    pub norm_samples: usize,
    /// Global max − min of the full-model outputs over time.
    pub output_range: f64,
    /// Largest per-output max − min of the full-model outputs.
    pub output_excursion: f64,
    pub cov_err_ss: f64,
    pub cov_err_traj: Vec<(f64, f64)>,
    pub full_cov_ss: DMatrix<f64>,
    pub reduced_cov_ss: DMatrix<f64>,
    pub max_algebraic_residual: f64,
    pub full_outputs: Trajectory,
    pub reduced_outputs: Trajectory,
}

impl ErrorReport {
    /// `(metric, value)` rows shared by the text and CSV forms.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format!("{v:.10e}");
        vec![
            ("method", self.method.clone()),
            ("partition", self.partition.clone()),
            ("r", self.r.to_string()),
            ("t_start", f(self.t_span.0)),
            ("t_end", f(self.t_span.1)),
            ("rtol", f(self.rtol)),
            ("atol", f(self.atol)),
            ("omega", f(self.omega)),
            ("norm_samples", self.norm_samples.to_string()),
            ("l1", f(self.norms.l1)),
            ("l2", f(self.norms.l2)),
            ("linf", f(self.norms.linf)),
            ("output_range", f(self.output_range)),
            ("linf_rel_range", f(self.norms.linf / self.output_range)),
            ("output_excursion", f(self.output_excursion)),
            ("linf_rel_excursion", f(self.norms.linf / self.output_excursion)),
            ("cov_err_ss", f(self.cov_err_ss)),
            ("cov_err_max", f(self.cov_err_traj.iter().map(|p| p.1).fold(0.0, f64::max))),
            ("max_algebraic_residual", f(self.max_algebraic_residual)),
        ]
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "metric,value")?;
        for (k, v) in self.rows() {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.rows() {
            let _ = writeln!(s, "{k:<24} {v}");
        }
        let _ = writeln!(s, "full output covariance at t_end:");
        for row in self.full_cov_ss.row_iter() {
            let _ = writeln!(s, "  {}", row.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(" "));
        }
        let _ = writeln!(s, "reduced output covariance at t_end:");
        for row in self.reduced_cov_ss.row_iter() {
            let _ = writeln!(s, "  {}", row.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(" "));
        }
        s
    }

    /// Writes `t,cov_err`.
    pub fn write_cov_error_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "t,cov_err")?;
        for (t, e) in &self.cov_err_traj {
            writeln!(w, "{t:.16e},{e:.16e}")?;
        }
        Ok(())
    }
}

fn partition_label(rm: &ReducedModel) -> String {
    let names = rm.base().species();
    let ordered: Vec<&str> = rm.order().iter().map(|&i| names[i].as_str()).collect();
    let retained = ordered[..rm.l()].join(" ");
    match &rm.partition {
        Some(p) => {
            let groups: Vec<String> = p
                .groups()
                .iter()
                .zip(p.r_per_group())
                .map(|(g, r)| format!("{{{}}}:{r}", g.iter().map(|&i| ordered[i]).collect::<Vec<_>>().join(" ")))
                .collect();
            format!("retain {retained}; lump {}", groups.join(" "))
        }
        None => format!("retain {retained}; fast {}", ordered[ordered.len() - rm.r()..].join(" ")),
    }
}

/// Simulates `net` and `rm` from `x_ss + perturbation` with zero initial
/// fluctuation covariance and compares the outputs.
pub fn compare_models(
    net: &ReactionNetwork,
    rm: &ReducedModel,
    perturbation: &DVector<f64>,
    opts: &CompareOptions,
) -> Result<ErrorReport, MetricsError> {
    let n = net.species().len();
    if perturbation.len() != n {
        return Err(MetricsError::Dimension(format!("perturbation has {} entries, network has {n}", perturbation.len())));
    }
    let x0 = &rm.x_ss + perturbation;
    let t_end = match opts.t_end {
        Some(t) => t,
        None => suggested_horizon(net, &rm.x_ss, perturbation.amax(), opts.ode.tol.atol)?,
    };
    let times = uniform_times(0.0, t_end, opts.n_samples.max(3));
    let (full, full_cov) = simulate_lna(net, &x0, &DMatrix::zeros(n, n), &times, &opts.ode, CovMode::Interpolate)?;
    let red = simulate_reduced(rm, &x0, &times, &opts.ode)?;

    let outs = rm.output_indices().to_vec();
    let yf = full.select(&outs);
    let c_full = DMatrix::from_fn(outs.len(), n, |i, j| if outs[i] == j { 1.0 } else { 0.0 });
    let l = outs.len();

    let ipf = yf.interpolator();
    let ipr = red.outputs.interpolator();
    let (norms, samples) = adaptive_norms(|t| ipf.eval(t) - ipr.eval(t), 0.0, t_end, times.len())?;

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut excursion = 0.0_f64;
    for j in 0..l {
        let col = yf.states().column(j);
        lo = lo.min(col.min());
        hi = hi.max(col.max());
        excursion = excursion.max(col.max() - col.min());
    }

    let ident = DMatrix::identity(l, l);
    let cov = covariance_error(&full_cov, &red.output_cov, &c_full, &ident)?;
    let full_cov_ss = &c_full * full_cov.last() * c_full.transpose();
    Ok(ErrorReport {
        method: rm.method.name().to_string(),
        partition: partition_label(rm),
        r: rm.r(),
        t_span: (0.0, t_end),
        rtol: opts.ode.tol.rtol,
        atol: opts.ode.tol.atol,
        omega: net.volume(),
        norms,
        norm_samples: samples,
        output_range: hi - lo,
        output_excursion: excursion,
        cov_err_ss: cov.ss,
        cov_err_traj: cov.times.iter().copied().zip(cov.traj.iter().copied()).collect(),
        full_cov_ss,
        reduced_cov_ss: red.output_cov.last().clone(),
        max_algebraic_residual: red.max_algebraic_residual,
        full_outputs: yf,
        reduced_outputs: red.outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_norms() {
        let (n, _) = adaptive_norms(|t| DVector::from_vec(vec![(-t).exp()]), 0.0, 20.0, 1001).unwrap();
        assert!((n.l1 - 1.0).abs() < 1e-4);
        assert!((n.l2 - 0.5f64.sqrt()).abs() < 1e-4);
        assert_eq!(n.linf, 1.0);
    }

    #[test]
    fn zero_signal() {
        let (n, _) = adaptive_norms(|_| DVector::zeros(2), 0.0, 1.0, 11).unwrap();
        assert_eq!(n, SignalNorms::ZERO);
    }

    #[test]
    fn two_components() {
        let (n, _) = adaptive_norms(|t| DVector::from_vec(vec![(-t).exp(), -(-t).exp()]), 0.0, 30.0, 1001).unwrap();
        assert!((n.l1 - 2.0).abs() < 2e-4);
        assert_eq!(n.linf, 1.0);
    }

    #[test]
    fn scalar_covariance_gap() {
        let t = vec![0.0, 1.0];
        let full = CovTrajectory::new(t.clone(), vec![DMatrix::from_element(1, 1, 1.0); 2]);
        let red = CovTrajectory::new(t, vec![DMatrix::from_element(1, 1, 0.9); 2]);
        let id = DMatrix::identity(1, 1);
        let e = covariance_error(&full, &red, &id, &id).unwrap();
        assert!(e.traj.iter().all(|v| (v - 0.1).abs() < 1e-15));
        assert_eq!(covariance_error(&full, &full, &id, &id).unwrap().ss, 0.0);
    }
}
