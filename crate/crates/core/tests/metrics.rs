use lna_mor::lna::{steady_state, uniform_times, OdeOptions, SteadyStateOptions, Trajectory};
use lna_mor::metrics::{adaptive_norms, compare_models, norms_on_grid, signal_norms, suggested_horizon, CompareOptions};
use lna_mor::models::toy_network;
use lna_mor::reduction::parse_reduction_config;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn signal<'a>(amp: &'a [f64], rate: &'a [f64], freq: &'a [f64]) -> impl Fn(f64) -> DVector<f64> + 'a {
    move |t| DVector::from_fn(amp.len(), |i, _| amp[i] * (-rate[i] * t).exp() * (freq[i] * t).cos())
}

#[test]
fn exponential_trajectory_norms() {
    let times = uniform_times(0.0, 20.0, 401);
    let states = DMatrix::from_fn(times.len(), 1, |i, _| (-times[i]).exp());
    let n = signal_norms(&Trajectory::new(times, states, vec!["u".into()])).unwrap();
    assert!((n.l1 - 1.0).abs() < 1e-4);
    assert!((n.l2 - 0.5f64.sqrt()).abs() < 1e-4);
    assert_eq!(n.linf, 1.0);
}

#[test]
fn mismatched_grid_rejected() {
    assert!(norms_on_grid(&[0.0, 1.0], &[DVector::zeros(1)]).is_err());
    assert!(adaptive_norms(|_| DVector::zeros(1), 1.0, 1.0, 10).is_err());
}

#[test]
fn zero_perturbation_with_no_truncation_gives_zero_error() {
    let net = toy_network();
    let x_ss = steady_state(&net, net.x0(), &SteadyStateOptions::default()).unwrap().x;
    let rm = parse_reduction_config("retain = m1 m2; lump = {p1 p2}:0").unwrap().reduce(&net, &x_ss).unwrap();
    let opts = CompareOptions { t_end: Some(50.0), ode: OdeOptions::default(), n_samples: 501 };
    let r = compare_models(&net, &rm, &DVector::zeros(4), &opts).unwrap();
    let tol = 10.0 * (opts.ode.tol.atol + opts.ode.tol.rtol * x_ss.amax());
    assert!(r.norms.linf <= tol, "{}", r.norms.linf);
    assert!(r.cov_err_ss <= 1e-8);
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.starts_with("metric,value\nmethod,structured\n"));
    assert!(csv.contains("\nomega,1.0000000000e2\n"));
    assert!(compare_models(&net, &rm, &DVector::zeros(3), &opts).is_err());
}

#[test]
fn horizon_covers_the_slowest_mode() {
    let net = toy_network();
    let x_ss = steady_state(&net, net.x0(), &SteadyStateOptions::default()).unwrap().x;
    let base = suggested_horizon(&net, &x_ss, 0.0, 1e-10).unwrap();
    assert!((base * 0.0908542 - 20.0).abs() < 1e-3);
    assert!(suggested_horizon(&net, &x_ss, 1.0, 1e-10).unwrap() > base);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_and_holder(
        amp in prop::collection::vec(-2.0f64..2.0, 1..4),
        rate in prop::collection::vec(0.2f64..3.0, 4),
        freq in prop::collection::vec(0.0f64..3.0, 4),
        c in 0.1f64..10.0,
    ) {
        let u = signal(&amp, &rate, &freq);
        let (n, samples) = adaptive_norms(&u, 0.0, 15.0, 201).unwrap();
        let (m, scaled_samples) = adaptive_norms(|t| u(t) * c, 0.0, 15.0, 201).unwrap();
        prop_assert_eq!(samples, scaled_samples);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs());
        prop_assert!(close(m.l1, c * n.l1) && close(m.l2, c * n.l2) && close(m.linf, c * n.linf));
        prop_assert!(n.l2 * n.l2 <= n.linf * n.l1 * (1.0 + 1e-12));

        let times = uniform_times(0.0, 15.0, 2 * samples - 1);
        let vals: Vec<DVector<f64>> = times.iter().map(|&t| u(t)).collect();
        let d = norms_on_grid(&times, &vals).unwrap();
        let rc = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        prop_assert!(rc(n.l1, d.l1) < 1e-3 && rc(n.l2, d.l2) < 1e-3 && rc(n.linf, d.linf) < 1e-3);
    }
}
