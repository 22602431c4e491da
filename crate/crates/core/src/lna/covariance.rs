use nalgebra::{DMatrix, DVector};

use super::ode::{integrate_ode, OdeOptions};
use super::trajectory::{CovTrajectory, Trajectory};
use super::{diffusion, jacobian_j, macroscopic_rhs, span_of, uniform_times, LnaError};
use crate::netparse::KineticModel;

/// How the covariance equation obtains the macroscopic state it depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovMode {
    /// Integrate `x(t)` first, then evaluate J and the diffusion along a
    /// cubic interpolant of it.
    #[default]
    Interpolate,
    /// Integrate `x` and `X` together as one system.
    CoIntegrate,
}

fn pack(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows();
    let mut v = DVector::zeros(n * (n + 1) / 2);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            v[k] = x[(i, j)];
            k += 1;
        }
    }
    v
}

fn unpack(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            x[(i, j)] = v[k];
            x[(j, i)] = v[k];
            k += 1;
        }
    }
    x
}

fn lyap_rhs(j: &DMatrix<f64>, d: &DMatrix<f64>, x: &DMatrix<f64>) -> DVector<f64> {
    let jx = j * x;
    // J X + X Jᵀ = JX + (JX)ᵀ; packing the upper triangle keeps X symmetric.
    pack(&(&jx + jx.transpose() + d))
}

/// Integrates `Ẋ = J(t) X + X J(t)ᵀ + D(t)` from `x0_cov`, reporting at `times`.
///
/// `coeffs(t)` supplies the drift `J(t)` and diffusion `D(t)`. The matrix is
/// stored as its upper triangle, so every reported `X(t)` is exactly symmetric.
pub fn integrate_lyapunov_ode<C>(
    x0_cov: &DMatrix<f64>,
    times: &[f64],
    opts: &OdeOptions,
    mut coeffs: C,
) -> Result<CovTrajectory, LnaError>
where
    C: FnMut(f64) -> Result<(DMatrix<f64>, DMatrix<f64>), LnaError>,
{
    let n = x0_cov.nrows();
    if x0_cov.ncols() != n {
        return Err(LnaError::InvalidInput("initial covariance must be square".into()));
    }
    let span = span_of(times)?;
    let tr = integrate_ode(
        |t, v: &DVector<f64>| -> Result<DVector<f64>, LnaError> {
            let (j, d) = coeffs(t)?;
            Ok(lyap_rhs(&j, &d, &unpack(v.as_slice(), n)))
        },
        &pack(&crate::linalg::symmetrize(x0_cov)),
        span,
        times,
        opts,
    )?;
    let covs = (0..tr.len())
        .map(|i| unpack(tr.states().row(i).transpose().as_slice(), n))
        .collect();
    Ok(CovTrajectory::new(tr.times().to_vec(), covs))
}

/// Covariance of the fluctuations along a macroscopic trajectory.
///
/// J and the diffusion `Ω⁻¹ S F² Sᵀ` are re-evaluated at the cubic
/// interpolant of `x_traj`; outputs are at the trajectory's sample times.
pub fn integrate_lyapunov_cov<M: KineticModel + ?Sized>(
    model: &M,
    x_traj: &Trajectory,
    x0_cov: &DMatrix<f64>,
    opts: &OdeOptions,
) -> Result<CovTrajectory, LnaError> {
    let ip = x_traj.interpolator();
    integrate_lyapunov_ode(x0_cov, x_traj.times(), opts, |t| {
        let x = ip.eval(t);
        Ok((jacobian_j(model, &x)?, diffusion(model, &x)?))
    })
}

/// Macroscopic trajectory and fluctuation covariance from `(x0, X0)`.
pub fn simulate_lna<M: KineticModel + ?Sized>(
    model: &M,
    x0: &DVector<f64>,
    x0_cov: &DMatrix<f64>,
    times: &[f64],
    opts: &OdeOptions,
    mode: CovMode,
) -> Result<(Trajectory, CovTrajectory), LnaError> {
    let n = model.n_species();
    let span = span_of(times)?;
    match mode {
        CovMode::Interpolate => {
            let traj = super::simulate_macroscopic(model, x0, times, opts)?;
            let dense_times = merge_grid(&uniform_times(span.0, span.1, 4001), times);
            let dense = super::simulate_macroscopic(model, x0, &dense_times, opts)?;
            let ip = dense.interpolator();
            let cov = integrate_lyapunov_ode(x0_cov, times, opts, |t| {
                let x = ip.eval(t);
                Ok((jacobian_j(model, &x)?, diffusion(model, &x)?))
            })?;
            Ok((traj, cov))
        }
        CovMode::CoIntegrate => {
            let mut y0 = DVector::zeros(n + n * (n + 1) / 2);
            y0.rows_mut(0, n).copy_from(x0);
            y0.rows_mut(n, n * (n + 1) / 2).copy_from(&pack(&crate::linalg::symmetrize(x0_cov)));
            let tr = integrate_ode(
                |_, y: &DVector<f64>| -> Result<DVector<f64>, LnaError> {
                    let x = y.rows(0, n).into_owned();
                    let cov = unpack(&y.as_slice()[n..], n);
                    let mut out = DVector::zeros(y.len());
                    out.rows_mut(0, n).copy_from(&macroscopic_rhs(model, &x)?);
                    let dcov = lyap_rhs(&jacobian_j(model, &x)?, &diffusion(model, &x)?, &cov);
                    out.rows_mut(n, dcov.len()).copy_from(&dcov);
                    Ok(out)
                },
                &y0,
                span,
                times,
                opts,
            )?;
            let cols: Vec<usize> = (0..n).collect();
            let traj = tr.select(&cols).with_labels(model.species_names());
            let covs = (0..tr.len())
                .map(|i| unpack(&tr.states().row(i).transpose().as_slice()[n..], n))
                .collect();
            Ok((traj, CovTrajectory::new(tr.times().to_vec(), covs)))
        }
    }
}

/// Sorted union of two increasing grids, dropping near-duplicates.
pub(crate) fn merge_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let scale = all.last().map_or(1.0, |v| v.abs().max(1.0));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for v in all {
        match out.last() {
            Some(&last) if v - last <= 1e-12 * scale => {}
            _ => out.push(v),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netparse::parse_network;

    #[test]
    fn scalar_covariance_matches_closed_form() {
        // J = -1, diffusion = 2 → X(t) = 1 - e^{-2t}.
        let x0 = DMatrix::zeros(1, 1);
        let cov = integrate_lyapunov_ode(&x0, &[0.0, 0.5, 1.0], &OdeOptions::default(), |_| {
            Ok((DMatrix::from_element(1, 1, -1.0), DMatrix::from_element(1, 1, 2.0)))
        })
        .unwrap();
        assert!((cov.last()[(0, 0)] - (1.0 - (-2.0f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn interpolated_and_cointegrated_agree() {
        let net = parse_network(
            "species a = 2\nspecies b = 0\nreaction in: -> a @ 1\nreaction ab: a -> b @ a^2\nreaction out: b -> @ b\n",
        )
        .unwrap();
        let times = uniform_times(0.0, 5.0, 51);
        let x0c = DMatrix::zeros(2, 2);
        let opts = OdeOptions::default();
        let (t1, c1) = simulate_lna(&net, net.x0(), &x0c, &times, &opts, CovMode::Interpolate).unwrap();
        let (t2, c2) = simulate_lna(&net, net.x0(), &x0c, &times, &opts, CovMode::CoIntegrate).unwrap();
        assert!((t1.states() - t2.states()).amax() < 1e-7);
        for (a, b) in c1.covariances().iter().zip(c2.covariances()) {
            assert!((a - b).amax() < 1e-7 * (1.0 + b.amax()));
        }
        assert_eq!(c1.max_asymmetry(), 0.0);
    }
}
