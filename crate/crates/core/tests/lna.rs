use lna_mor::lna::{
    diffusion, fluctuation_ensemble, jacobian_j, linearize_at, simulate_fluctuation_paths, simulate_lna,
    simulate_macroscopic, steady_state, uniform_times, CovMode, FluctuationDynamics, OdeOptions, PathOptions,
    SteadyStateOptions, Tolerances,
};
use lna_mor::models::{linear_network, toy_network};
use lna_mor::netparse::{parse_network, KineticModel};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn tight() -> OdeOptions {
    OdeOptions::from(Tolerances::new(1e-10, 1e-12))
}

// For dx/dt = 1 - x with x(0) = 0: x = 1 - e^{-t} and, with Ω = v,
// dX/dt = -2X + (2 - e^{-t})/v, so X = (1 - e^{-2t})/v - (e^{-t} - e^{-2t})/v.
fn linear_variance(t: f64, v: f64) -> f64 {
    ((1.0 - (-2.0 * t).exp()) - ((-t).exp() - (-2.0 * t).exp())) / v
}

#[test]
fn linear_model_matches_closed_form() {
    let net = linear_network();
    let v = net.volume();
    let times = uniform_times(0.0, 8.0, 81);
    for mode in [CovMode::Interpolate, CovMode::CoIntegrate] {
        let (x, cov) = simulate_lna(&net, net.x0(), &DMatrix::zeros(1, 1), &times, &tight(), mode).unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert!((x.state(i)[0] - (1.0 - (-t).exp())).abs() < 1e-9);
            assert!((cov.covariances()[i][(0, 0)] - linear_variance(t, v)).abs() < 1e-9 / v, "{mode:?} t={t}");
        }
    }
}

#[test]
fn steady_state_of_linear_model() {
    let net = linear_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default()).unwrap();
    assert!((ss.x[0] - 1.0).abs() < 1e-12);
    assert!(ss.hurwitz);
}

#[test]
fn toy_steady_state_is_the_stable_branch() {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default()).unwrap();
    let expect = [0.69221444, 3.46107219, 0.05778556, 0.28892781];
    for (v, e) in ss.x.iter().zip(expect) {
        assert!((v - e).abs() < 1e-7);
    }
    assert!(ss.residual <= 1e-10);
    assert!(ss.hurwitz);
}

#[test]
fn interpolate_and_cointegrate_agree_on_toy() {
    let net = toy_network();
    let times = uniform_times(0.0, 30.0, 31);
    let x0c = DMatrix::zeros(4, 4);
    let (xa, ca) = simulate_lna(&net, net.x0(), &x0c, &times, &tight(), CovMode::Interpolate).unwrap();
    let (xb, cb) = simulate_lna(&net, net.x0(), &x0c, &times, &tight(), CovMode::CoIntegrate).unwrap();
    assert!((xa.states() - xb.states()).amax() < 1e-8);
    let gap = ca.covariances().iter().zip(cb.covariances()).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    assert!(gap < 1e-8, "{gap}");
    assert_eq!(ca.max_asymmetry(), 0.0);
}

#[test]
fn unstable_steady_state_is_flagged() {
    let net = parse_network("species x = 1\nreaction grow: x -> 2 x @ x\nreaction decay: x -> @ 0.5 * x\n").unwrap();
    let ss = steady_state(&net, &DVector::from_element(1, 0.3), &SteadyStateOptions::default()).unwrap();
    assert!(!ss.hurwitz);
    assert!(linearize_at(&net, &ss.x, &[0]).is_err());
}

#[test]
fn paths_are_reproducible_and_seed_dependent() {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default()).unwrap();
    let sys = linearize_at(&net, &ss.x, &[0, 2]).unwrap();
    let dynamics = FluctuationDynamics::Linear { a: &sys.a, b: &sys.b };
    let opts = PathOptions { n_paths: 64, dt: 0.01, t_end: 2.0, seed: 7, record_every: 10 };
    let a = fluctuation_ensemble(&dynamics, &opts).unwrap();
    let b = fluctuation_ensemble(&dynamics, &opts).unwrap();
    assert_eq!(a, b);
    let c = fluctuation_ensemble(&dynamics, &PathOptions { seed: 8, ..opts.clone() }).unwrap();
    assert_ne!(a.mean, c.mean);
    let paths = simulate_fluctuation_paths(&dynamics, &opts).unwrap();
    assert_eq!(paths.len(), 64);
    assert_eq!(paths[0].times().len(), 21);
    assert_eq!(paths[0].state(0), DVector::zeros(4));
}

#[test]
fn ensemble_variance_of_linear_model() {
    let net = linear_network();
    let x = DVector::from_element(1, 1.0);
    let a = jacobian_j(&net, &x).unwrap();
    let b = lna_mor::lna::noise_input(&net, &x).unwrap();
    let opts = PathOptions { n_paths: 20_000, dt: 0.005, t_end: 6.0, seed: 3, record_every: 1200 };
    let ens = fluctuation_ensemble(&FluctuationDynamics::Linear { a: &a, b: &b }, &opts).unwrap();
    let stationary = 1.0 / net.volume() * (1.0 - (-12.0f64).exp());
    assert!((ens.cov.last().unwrap()[(0, 0)] / stationary - 1.0).abs() < 0.05);
}

proptest! {
    #[test]
    fn diffusion_is_symmetric_psd(x in prop::collection::vec(0.01f64..5.0, 4)) {
        let net = toy_network();
        let d = diffusion(&net, &DVector::from_vec(x)).unwrap();
        prop_assert!((&d - d.transpose()).amax() == 0.0);
        prop_assert!(d.clone().symmetric_eigen().eigenvalues.min() >= -1e-12 * d.amax());
    }

    #[test]
    fn macroscopic_trajectory_stays_nonnegative(x in prop::collection::vec(0.0f64..5.0, 4)) {
        let net = toy_network();
        let tr = simulate_macroscopic(&net, &DVector::from_vec(x), &uniform_times(0.0, 20.0, 41), &OdeOptions::default()).unwrap();
        prop_assert!(tr.states().min() >= -1e-9);
        prop_assert_eq!(tr.dim(), net.n_species());
    }
}

#[test]
fn symmetric_start_finds_the_symmetric_saddle() {
    let net = toy_network();
    let guess = DVector::from_vec(vec![1.0, 2.0, 1.0, 2.0]);
    let ss = steady_state(&net, &guess, &SteadyStateOptions::default()).unwrap();
    assert!((ss.x[0] - ss.x[2]).abs() <= 1e-8);
    assert!((ss.x[1] - ss.x[3]).abs() <= 1e-8);
    assert!(!ss.hurwitz);
    assert!(!ss.warnings.is_empty());
}

#[test]
fn scalar_differential_lyapunov() {
    let times = uniform_times(0.0, 1.0, 11);
    let cov = lna_mor::lna::integrate_lyapunov_ode(&DMatrix::zeros(1, 1), &times, &tight(), |_| {
        Ok((DMatrix::from_element(1, 1, -1.0), DMatrix::from_element(1, 1, 2.0)))
    })
    .unwrap();
    assert!((cov.last()[(0, 0)] - (1.0 - (-2.0f64).exp())).abs() < 1e-6);
}
