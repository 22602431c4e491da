//! Dormand–Prince 5(4) integrator with the classic 4th-order continuous
//! extension for output at arbitrary times.

use std::error::Error as StdError;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::trajectory::Trajectory;

/// Mixed relative/absolute local error tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-8, atol: 1e-10 }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Tolerances { rtol, atol }
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite()) {
            return Err(OdeError::InvalidInput(format!(
                "tolerances must be positive (rtol={}, atol={})",
                self.rtol, self.atol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub tol: Tolerances,
    pub max_steps: usize,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: Tolerances::default(), max_steps: 1_000_000, h_init: None, h_max: None }
    }
}

impl From<Tolerances> for OdeOptions {
    fn from(tol: Tolerances) -> Self {
        OdeOptions { tol, ..OdeOptions::default() }
    }
}

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e}); the problem may be stiff")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("right-hand side produced a non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("maximum number of steps ({max_steps}) reached at t = {t}")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: Box<dyn StdError + Send + Sync> },
    #[error("invalid integrator input: {0}")]
    InvalidInput(String),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

enum Eval {
    Ok(DVector<f64>),
    Bad(Option<Box<dyn StdError + Send + Sync>>),
}

fn call<F, E>(rhs: &mut F, t: f64, x: &DVector<f64>) -> Eval
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, E>,
    E: StdError + Send + Sync + 'static,
{
    match rhs(t, x) {
        Ok(v) if all_finite(&v) => Eval::Ok(v),
        Ok(_) => Eval::Bad(None),
        Err(e) => Eval::Bad(Some(Box::new(e))),
    }
}

/// Integrates `dx/dt = rhs(t, x)` over `t_span`.
///
/// States are reported at `out_times` (which must lie in `t_span` and be
/// strictly increasing) using dense output; an empty `out_times` reports
/// every accepted step. The derivative at each reported point is stored in
/// the trajectory so it can be Hermite-interpolated later.
pub fn integrate_ode<F, E>(
    mut rhs: F,
    x0: &DVector<f64>,
    t_span: (f64, f64),
    out_times: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, E>,
    E: StdError + Send + Sync + 'static,
{
    opts.tol.validate()?;
    let (t0, t1) = t_span;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(OdeError::InvalidInput(format!("invalid time span [{t0}, {t1}]")));
    }
    let eps_t = 1e-12 * (t1 - t0).max(t0.abs()).max(1.0);
    for w in out_times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(OdeError::InvalidInput("output times must be strictly increasing".into()));
        }
    }
    if let (Some(&first), Some(&last)) = (out_times.first(), out_times.last()) {
        if first < t0 - eps_t || last > t1 + eps_t {
            return Err(OdeError::InvalidInput("output times outside the integration span".into()));
        }
    }
    if !all_finite(x0) {
        return Err(OdeError::NonFinite { t: t0 });
    }

    let n = x0.len();
    let tol = opts.tol;
    let h_max = opts.h_max.unwrap_or(t1 - t0);
    let mut t = t0;
    let mut x = x0.clone();
    let mut k1 = match call(&mut rhs, t, &x) {
        Eval::Ok(v) => v,
        Eval::Bad(Some(source)) => return Err(OdeError::Rhs { t, source }),
        Eval::Bad(None) => return Err(OdeError::NonFinite { t }),
    };

    let dense_every_step = out_times.is_empty();
    let mut times = Vec::new();
    let mut states: Vec<DVector<f64>> = Vec::new();
    let mut derivs: Vec<DVector<f64>> = Vec::new();
    let mut next_out = 0usize;
    // Outputs at (or numerically at) t0.
    while next_out < out_times.len() && out_times[next_out] <= t0 + eps_t {
        times.push(out_times[next_out]);
        states.push(x.clone());
        derivs.push(k1.clone());
        next_out += 1;
    }
    if dense_every_step {
        times.push(t0);
        states.push(x.clone());
        derivs.push(k1.clone());
    }

    let scale = |a: &DVector<f64>, b: &DVector<f64>, i: usize| tol.atol + tol.rtol * a[i].abs().max(b[i].abs());
    let norm = |v: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| -> f64 {
        if n == 0 {
            return 0.0;
        }
        let s: f64 = (0..n).map(|i| (v[i] / scale(a, b, i)).powi(2)).sum();
        (s / n as f64).sqrt()
    };

    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            // Hairer–Wanner starting step heuristic.
            let d0 = norm(&x, &x, &x);
            let d1 = norm(&k1, &x, &x);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let h0 = h0.min(h_max);
            let x1 = &x + &k1 * h0;
            let d2 = match call(&mut rhs, t + h0, &x1) {
                Eval::Ok(k) => norm(&(k - &k1), &x, &x) / h0,
                Eval::Bad(_) => f64::INFINITY,
            };
            let dmax = d1.max(d2);
            let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dmax).powf(0.2) };
            (100.0 * h0).min(h1).min(h_max)
        }
    };

    let mut steps = 0usize;
    let mut last_reject = false;
    let mut last_failure: Option<Box<dyn StdError + Send + Sync>> = None;
    let mut last_nonfinite = false;
    while t < t1 - eps_t {
        if steps >= opts.max_steps {
            return Err(OdeError::MaxSteps { t, max_steps: opts.max_steps });
        }
        steps += 1;
        if t + h > t1 {
            h = t1 - t;
        }
        if h.abs() < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            if let Some(source) = last_failure {
                return Err(OdeError::Rhs { t, source });
            }
            if last_nonfinite {
                return Err(OdeError::NonFinite { t });
            }
            return Err(OdeError::StepSizeUnderflow { t, h });
        }

        let stages = (|| -> Result<[DVector<f64>; 7], Option<Box<dyn StdError + Send + Sync>>> {
            let ev = |rhs: &mut F, tt: f64, xx: DVector<f64>| match call(rhs, tt, &xx) {
                Eval::Ok(v) => Ok(v),
                Eval::Bad(e) => Err(e),
            };
            let k2 = ev(&mut rhs, t + C2 * h, &x + &k1 * (h * A21))?;
            let k3 = ev(&mut rhs, t + C3 * h, &x + (&k1 * A31 + &k2 * A32) * h)?;
            let k4 = ev(&mut rhs, t + C4 * h, &x + (&k1 * A41 + &k2 * A42 + &k3 * A43) * h)?;
            let k5 = ev(
                &mut rhs,
                t + C5 * h,
                &x + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h,
            )?;
            let x_new = &x + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h;
            let k6 = ev(&mut rhs, t + h, x_new)?;
            let x5 = &x + (&k1 * A71 + &k3 * A73 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h;
            let k7 = ev(&mut rhs, t + h, x5.clone())?;
            Ok([x5, k2, k3, k4, k5, k6, k7])
        })();

        let [x5, _k2, k3, k4, k5, k6, k7] = match stages {
            Ok(s) => s,
            Err(e) => {
                last_nonfinite = e.is_none();
                last_failure = e;
                h *= 0.2;
                last_reject = true;
                continue;
            }
        };
        let errv = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
        let err = norm(&errv, &x, &x5);
        if !err.is_finite() {
            h *= 0.2;
            last_reject = true;
            last_nonfinite = true;
            continue;
        }
        let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
        if err <= 1.0 {
            last_failure = None;
            last_nonfinite = false;
            let t_new = t + h;
            // Dense output coefficients.
            let r1 = x.clone();
            let r2 = &x5 - &x;
            let r3 = &k1 * h - &r2;
            let r4 = &r2 - &k7 * h - &r3;
            let r5 = (&k1 * D1 + &k3 * D3 + &k4 * D4 + &k5 * D5 + &k6 * D6 + &k7 * D7) * h;
            while next_out < out_times.len() && out_times[next_out] <= t_new + eps_t {
                let tout = out_times[next_out].min(t_new);
                let th = (tout - t) / h;
                let u = 1.0 - th;
                let xo = &r1 + (&r2 + (&r3 + (&r4 + &r5 * u) * th) * u) * th;
                let d = match call(&mut rhs, tout, &xo) {
                    Eval::Ok(v) => v,
                    Eval::Bad(Some(source)) => return Err(OdeError::Rhs { t: tout, source }),
                    Eval::Bad(None) => return Err(OdeError::NonFinite { t: tout }),
                };
                times.push(out_times[next_out]);
                states.push(xo);
                derivs.push(d);
                next_out += 1;
            }
            t = t_new;
            x = x5;
            k1 = k7;
            if dense_every_step {
                times.push(t);
                states.push(x.clone());
                derivs.push(k1.clone());
            }
            if last_reject {
                fac = fac.min(1.0);
            }
            last_reject = false;
            h *= fac.clamp(0.2, 10.0);
            h = h.min(h_max);
        } else {
            last_reject = true;
            h *= fac.clamp(0.2, 1.0);
        }
    }
    // Outputs that coincide with t1 up to rounding.
    while next_out < out_times.len() {
        times.push(out_times[next_out]);
        states.push(x.clone());
        derivs.push(k1.clone());
        next_out += 1;
    }

    let m = times.len();
    let to_mat = |rows: &[DVector<f64>]| DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    Ok(Trajectory::new(times, to_mat(&states), (1..=n).map(|i| format!("x{i}")).collect())
        .with_derivatives(to_mat(&derivs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(v: DVector<f64>) -> Result<DVector<f64>, Infallible> {
        Ok(v)
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate_ode(|_, x| ok(-x), &DVector::from_element(1, 1.0), (0.0, 1.0), &[1.0], &OdeOptions::default())
            .unwrap();
        assert!((tr.states()[(0, 0)] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn scalar_lyapunov_form() {
        let tr = integrate_ode(
            |_, x| ok(x.map(|v| -2.0 * v + 2.0)),
            &DVector::from_element(1, 0.0),
            (0.0, 1.0),
            &[1.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((tr.states()[(0, 0)] - (1.0 - (-2.0f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let period = 2.0 * std::f64::consts::PI;
        let opts = OdeOptions::from(Tolerances::new(1e-9, 1e-12));
        let tr = integrate_ode(
            |_, x| ok(DVector::from_vec(vec![x[1], -x[0]])),
            &DVector::from_vec(vec![1.0, 0.0]),
            (0.0, 10.0 * period),
            &[],
            &opts,
        )
        .unwrap();
        let drift = (0..tr.len())
            .map(|i| {
                let s = tr.state(i);
                (0.5 * (s[0] * s[0] + s[1] * s[1]) - 0.5).abs()
            })
            .fold(0.0, f64::max);
        assert!(drift <= 1e-6, "energy drift {drift}");
    }

    #[test]
    fn dense_output_matches_requested_times() {
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let tr = integrate_ode(|_, x| ok(-x), &DVector::from_element(1, 1.0), (0.0, 5.0), &times, &OdeOptions::default())
            .unwrap();
        assert_eq!(tr.times(), &times[..]);
        for (i, t) in times.iter().enumerate() {
            assert!((tr.states()[(i, 0)] - (-t).exp()).abs() < 1e-8);
            assert!((tr.derivatives().unwrap()[(i, 0)] + (-t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn nan_rhs_reported() {
        let err = integrate_ode(
            |_, x| ok(x.map(|_| f64::NAN)),
            &DVector::from_element(1, 1.0),
            (0.0, 1.0),
            &[],
            &OdeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, OdeError::NonFinite { .. }));
    }

    #[test]
    fn blow_up_underflows() {
        // x' = x^2 from x(0)=1 blows up at t = 1.
        let err = integrate_ode(
            |_, x| ok(x.map(|v| v * v)),
            &DVector::from_element(1, 1.0),
            (0.0, 2.0),
            &[],
            &OdeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, OdeError::StepSizeUnderflow { .. } | OdeError::NonFinite { .. }));
    }

    #[test]
    fn rejects_bad_tolerances() {
        let opts = OdeOptions::from(Tolerances::new(0.0, 1e-10));
        assert!(matches!(
            integrate_ode(|_, x| ok(-x), &DVector::from_element(1, 1.0), (0.0, 1.0), &[], &opts),
            Err(OdeError::InvalidInput(_))
        ));
    }
}
