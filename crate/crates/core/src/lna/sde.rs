//! Euler–Maruyama sampling of the fluctuation SDE `η̇ = J η + Ω^{-1/2} S F Γ`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::trajectory::Trajectory;
use super::{jacobian_j, noise_input, LnaError};
use crate::netparse::KineticModel;

/// Drift and noise input the paths are driven by.
pub enum FluctuationDynamics<'a> {
    /// Constant `(A, B)`, e.g. a linearization at steady state.
    Linear { a: &'a DMatrix<f64>, b: &'a DMatrix<f64> },
    /// `J(x(t))` and `Ω^{-1/2} S F(x(t))` along a macroscopic trajectory.
    AlongTrajectory { model: &'a dyn KineticModel, trajectory: &'a Trajectory },
}

#[derive(Debug, Clone)]
pub struct PathOptions {
    pub n_paths: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Record every this many steps (the final step is always recorded).
    pub record_every: usize,
}

/// Pointwise ensemble statistics over recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    /// Row `i` is the sample mean at `times[i]`.
    pub mean: DMatrix<f64>,
    /// Unbiased sample covariance at each recorded time.
    pub cov: Vec<DMatrix<f64>>,
    pub n_paths: usize,
    pub labels: Vec<String>,
}

impl EnsembleSummary {
    /// Writes `t,mean_<label>...,var_<label>...`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let means: Vec<String> = self.labels.iter().map(|l| format!("mean_{l}")).collect();
        let vars: Vec<String> = self.labels.iter().map(|l| format!("var_{l}")).collect();
        writeln!(w, "t,{},{}", means.join(","), vars.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            row.extend((0..self.labels.len()).map(|j| format!("{:.16e}", self.mean[(i, j)])));
            row.extend((0..self.labels.len()).map(|j| format!("{:.16e}", self.cov[i][(j, j)])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

struct Schedule {
    n_steps: usize,
    dt: f64,
    drift: Vec<DMatrix<f64>>,
    /// Noise input already multiplied by √dt.
    noise: Vec<DMatrix<f64>>,
    record: Vec<usize>,
    labels: Vec<String>,
}

impl Schedule {
    fn at(&self, k: usize) -> (&DMatrix<f64>, &DMatrix<f64>) {
        let i = k.min(self.drift.len() - 1);
        (&self.drift[i], &self.noise[i])
    }
}

fn schedule(dynamics: &FluctuationDynamics<'_>, opts: &PathOptions) -> Result<Schedule, LnaError> {
    if !(opts.dt > 0.0 && opts.t_end > 0.0) || opts.record_every == 0 {
        return Err(LnaError::InvalidInput("dt, t_end and record_every must be positive".into()));
    }
    let n_steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let sq = opts.dt.sqrt();
    let (drift, noise, labels) = match dynamics {
        FluctuationDynamics::Linear { a, b } => {
            if a.nrows() != a.ncols() || b.nrows() != a.nrows() {
                return Err(LnaError::InvalidInput("A must be square and B must match its rows".into()));
            }
            let labels = (1..=a.nrows()).map(|i| format!("eta{i}")).collect();
            (vec![(*a).clone()], vec![*b * sq], labels)
        }
        FluctuationDynamics::AlongTrajectory { model, trajectory } => {
            let ip = trajectory.interpolator();
            let mut drift = Vec::with_capacity(n_steps);
            let mut noise = Vec::with_capacity(n_steps);
            for k in 0..n_steps {
                let x = ip.eval(trajectory.times()[0] + k as f64 * opts.dt);
                drift.push(jacobian_j(*model, &x)?);
                noise.push(noise_input(*model, &x)? * sq);
            }
            (drift, noise, model.species_names())
        }
    };
    let mut record: Vec<usize> = (0..=n_steps).step_by(opts.record_every).collect();
    if *record.last().unwrap() != n_steps {
        record.push(n_steps);
    }
    Ok(Schedule { n_steps, dt: opts.dt, drift, noise, record, labels })
}

/// Runs one path and returns the recorded states, row-major (#records × n).
fn run_path(s: &Schedule, seed: u64, path: usize) -> Vec<f64> {
    let n = s.drift[0].nrows();
    let r = s.noise[0].ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    let mut eta = DVector::<f64>::zeros(n);
    let mut next = DVector::<f64>::zeros(n);
    let mut xi = DVector::<f64>::zeros(r);
    let mut out = Vec::with_capacity(s.record.len() * n);
    let mut rec = s.record.iter().peekable();
    if rec.peek() == Some(&&0) {
        out.extend(eta.iter());
        rec.next();
    }
    for k in 0..s.n_steps {
        let (a, b) = s.at(k);
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        next.copy_from(&eta);
        next.gemv(s.dt, a, &eta, 1.0);
        next.gemv(1.0, b, &xi, 1.0);
        std::mem::swap(&mut eta, &mut next);
        if rec.peek() == Some(&&(k + 1)) {
            out.extend(eta.iter());
            rec.next();
        }
    }
    out
}

fn run_all(s: &Schedule, opts: &PathOptions) -> Vec<Vec<f64>> {
    // Each path owns the ChaCha stream with its index, so the result does
    // not depend on how rayon schedules the work.
    (0..opts.n_paths).into_par_iter().map(|p| run_path(s, opts.seed, p)).collect()
}

fn record_times(s: &Schedule, t0: f64) -> Vec<f64> {
    s.record.iter().map(|&k| t0 + k as f64 * s.dt).collect()
}

fn start_time(dynamics: &FluctuationDynamics<'_>) -> f64 {
    match dynamics {
        FluctuationDynamics::Linear { .. } => 0.0,
        FluctuationDynamics::AlongTrajectory { trajectory, .. } => trajectory.times()[0],
    }
}

/// Samples `n_paths` fluctuation trajectories with `η(0) = 0`.
pub fn simulate_fluctuation_paths(
    dynamics: &FluctuationDynamics<'_>,
    opts: &PathOptions,
) -> Result<Vec<Trajectory>, LnaError> {
    let s = schedule(dynamics, opts)?;
    let times = record_times(&s, start_time(dynamics));
    let n = s.drift[0].nrows();
    Ok(run_all(&s, opts)
        .into_iter()
        .map(|data| {
            Trajectory::new(times.clone(), DMatrix::from_row_slice(times.len(), n, &data), s.labels.clone())
        })
        .collect())
}

/// Ensemble mean and covariance of the sampled paths at each recorded time.
pub fn fluctuation_ensemble(
    dynamics: &FluctuationDynamics<'_>,
    opts: &PathOptions,
) -> Result<EnsembleSummary, LnaError> {
    if opts.n_paths < 2 {
        return Err(LnaError::InvalidInput("ensemble statistics need at least two paths".into()));
    }
    let s = schedule(dynamics, opts)?;
    let times = record_times(&s, start_time(dynamics));
    let n = s.drift[0].nrows();
    let m = times.len();
    let paths = run_all(&s, opts);
    let np = paths.len() as f64;
    let mut mean = DMatrix::zeros(m, n);
    for p in &paths {
        for i in 0..m {
            for j in 0..n {
                mean[(i, j)] += p[i * n + j];
            }
        }
    }
    mean /= np;
    let mut cov = vec![DMatrix::zeros(n, n); m];
    for p in &paths {
        for (i, c) in cov.iter_mut().enumerate() {
            for a in 0..n {
                let da = p[i * n + a] - mean[(i, a)];
                for b in a..n {
                    c[(a, b)] += da * (p[i * n + b] - mean[(i, b)]);
                }
            }
        }
    }
    for c in cov.iter_mut() {
        for a in 0..n {
            for b in a..n {
                c[(a, b)] /= np - 1.0;
                c[(b, a)] = c[(a, b)];
            }
        }
    }
    Ok(EnsembleSummary { times, mean, cov, n_paths: opts.n_paths, labels: s.labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_gives_zero_paths() {
        let a = DMatrix::from_element(2, 2, -1.0);
        let b = DMatrix::zeros(2, 3);
        let opts = PathOptions { n_paths: 4, dt: 0.01, t_end: 1.0, seed: 1, record_every: 10 };
        let paths = simulate_fluctuation_paths(&FluctuationDynamics::Linear { a: &a, b: &b }, &opts).unwrap();
        assert_eq!(paths.len(), 4);
        for p in paths {
            assert!(p.states().iter().all(|v| *v == 0.0));
            assert_eq!(p.len(), 11);
        }
    }

    #[test]
    fn same_seed_same_paths() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let b = DMatrix::from_element(1, 1, 1.0);
        let opts = PathOptions { n_paths: 8, dt: 0.01, t_end: 0.5, seed: 7, record_every: 5 };
        let d = FluctuationDynamics::Linear { a: &a, b: &b };
        let p1 = fluctuation_ensemble(&d, &opts).unwrap();
        let p2 = fluctuation_ensemble(&d, &opts).unwrap();
        assert_eq!(p1, p2);
        let other = fluctuation_ensemble(&d, &PathOptions { seed: 8, ..opts }).unwrap();
        assert_ne!(p1.mean, other.mean);
    }
}
