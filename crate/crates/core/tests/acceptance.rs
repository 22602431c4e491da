//! Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and fails
//! if any criterion fails.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lna_mor::gramians::{solve_lyapunov_eq, GramianStructure};
use lna_mor::linalg::{spectral_abscissa, submatrix, sym_lambda_max, sym_lambda_min, sym_norm2};
use lna_mor::lna::{
    fluctuation_ensemble, linearize_at, linearize_with_order, simulate_lna, simulate_macroscopic, steady_state,
    uniform_times, CovMode, FluctuationDynamics, OdeOptions, PathOptions, SteadyStateOptions, Tolerances,
};
use lna_mor::metrics::{adaptive_norms, compare_models, norms_on_grid, CompareOptions, ErrorReport, SignalNorms};
use lna_mor::models::{chain_network, toy_network};
use lna_mor::netparse::{transform_network, KineticModel, ReactionNetwork};
use lna_mor::reduction::{averaged_fluctuation_system, parse_reduction_config, ReducedModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn toy_steady() -> (ReactionNetwork, DVector<f64>) {
    let net = toy_network();
    let ss = steady_state(&net, net.x0(), &SteadyStateOptions::default()).unwrap();
    (net, ss.x)
}

fn reduce(net: &ReactionNetwork, x_ss: &DVector<f64>, spec: &str) -> ReducedModel {
    parse_reduction_config(spec).unwrap().reduce(net, x_ss).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn kronecker_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let k = id.kronecker(a) + a.kronecker(&id);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let x = k.lu().solve(&rhs).expect("Kronecker system is nonsingular");
    DMatrix::from_column_slice(n, n, x.as_slice())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_entry, mut worst_res) = (0.0_f64, 0.0_f64);
    for case in 0..50 {
        let n = 1 + case % 12;
        let m = random_matrix(&mut rng, n, n);
        let shift = spectral_abscissa(&m) + 0.5 + rng.random::<f64>();
        let a = m - DMatrix::identity(n, n) * shift;
        let g = random_matrix(&mut rng, n, n);
        let q = &g * g.transpose() + DMatrix::identity(n, n);
        let x = solve_lyapunov_eq(&a, &q).unwrap();
        let oracle = kronecker_lyapunov(&a, &q);
        worst_entry = worst_entry.max((&x - oracle).amax());
        let res = (&a * &x + &x * a.transpose() + &q).norm() / q.norm();
        worst_res = worst_res.max(res);
    }
    let t = start.elapsed();
    outcome(
        worst_entry <= 1e-9 && worst_res <= 1e-10 && t < Duration::from_secs(5),
        format!("max entry gap {worst_entry:.2e}, max relative residual {worst_res:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (net, x_ss) = toy_steady();
    let mut lines = Vec::new();
    let mut pass = true;
    for mode in ["two", "per-group"] {
        let rm = reduce(&net, &x_ss, &format!("retain = m1 m2; lump = {{p1 p2}}:1; block = {mode}"));
        let g = rm.gramians.as_ref().unwrap();
        let sys = linearize_with_order(&net, &x_ss, rm.order(), 2).unwrap();
        let (bbt, ctc) = (sys.bbt(), sys.ctc());
        let rp = sym_lambda_max(&(&sys.a * &g.p + &g.p * sys.a.transpose() + &bbt));
        let rq = sym_lambda_max(&(&g.q * &sys.a + sys.a.transpose() * &g.q + &ctc));
        let (mp, mq) = (sym_lambda_min(&g.p), sym_lambda_min(&g.q));
        let structure = GramianStructure::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let ok = rp <= 1e-8 * sym_norm2(&bbt)
            && rq <= 1e-8 * sym_norm2(&ctc)
            && mp > 0.0
            && mq > 0.0
            && structure.admits(&g.p)
            && structure.admits(&g.q);
        pass &= ok;
        lines.push(format!("{mode}: λmax {rp:.1e}/{rq:.1e}, λmin {mp:.1e}/{mq:.1e}"));
    }
    let t = start.elapsed();
    pass &= t < Duration::from_secs(10);
    outcome(pass, format!("{}, {:.2}s", lines.join("; "), t.as_secs_f64()))
}

fn balancing_check(rm: &ReducedModel) -> (f64, bool, f64) {
    let g = rm.gramians.as_ref().unwrap();
    let part = rm.partition.as_ref().unwrap();
    let blocks: Vec<Vec<usize>> = if rm.balanced.len() == part.groups().len() {
        part.groups().to_vec()
    } else {
        vec![(part.l()..part.n()).collect()]
    };
    let mut worst = 0.0_f64;
    let mut sorted = true;
    for (b, idx) in rm.balanced.iter().zip(&blocks) {
        let p22 = submatrix(&g.p, idx, idx);
        let q22 = submatrix(&g.q, idx, idx);
        let (ep, eq) = b.balancing_errors(&p22, &q22);
        worst = worst.max(ep).max(eq);
        sorted &= b.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]);
    }
    (worst, sorted, rm.projectors.biorthogonality_error())
}

fn criterion_3() -> Outcome {
    let (net, x_ss) = toy_steady();
    let chain = chain_network();
    let chain_ss = steady_state(&chain, chain.x0(), &SteadyStateOptions::default()).unwrap().x;
    let mut runs = Vec::new();
    for spec in [
        "retain = m1 m2; lump = {p1 p2}:1",
        "retain = m1 m2; lump = {p1 p2}:0",
        "retain = m1 m2; lump = {p1 p2}:2",
        "retain = m1 m2; lump = {p1 p2}:1; block = two",
        "retain = m1; lump = {p1 m2 p2}:2",
        "retain = m1; lump = {p1}:0, {m2 p2}:1",
    ] {
        runs.push((spec.to_string(), reduce(&net, &x_ss, spec)));
    }
    let names = chain.species().to_vec();
    let spec = format!("retain = {}; lump = {{{}}}:1", names[0], names[1..].join(" "));
    runs.push((spec.clone(), reduce(&chain, &chain_ss, &spec)));
    let (mut worst_bal, mut all_sorted, mut worst_bio) = (0.0_f64, true, 0.0_f64);
    for (_, rm) in &runs {
        let (b, s, v) = balancing_check(rm);
        worst_bal = worst_bal.max(b);
        all_sorted &= s;
        worst_bio = worst_bio.max(v);
    }
    outcome(
        worst_bal <= 1e-8 && all_sorted && worst_bio <= 1e-10,
        format!(
            "{} runs: balancing error {worst_bal:.1e}, Σ nonincreasing {all_sorted}, VᵀW error {worst_bio:.1e}",
            runs.len()
        ),
    )
}

fn tight() -> OdeOptions {
    OdeOptions::from(Tolerances::new(1e-10, 1e-12))
}

fn criterion_4() -> Outcome {
    let (net, x_ss) = toy_steady();
    let ode = tight();
    let mut pert = DVector::zeros(4);
    pert[0] = 0.1 * x_ss[0];
    pert[3] = -0.05 * x_ss[3];
    let mut lines = Vec::new();
    let mut pass = true;
    for spec in ["retain = m1 m2; lump = {p1 p2}:0", "retain = m1 m2; lump = {p1 p2}:0; block = two"] {
        let rm = reduce(&net, &x_ss, spec);
        let opts = CompareOptions { t_end: Some(100.0), ode: ode.clone(), n_samples: 1001 };
        let r = compare_models(&net, &rm, &pert, &opts).unwrap();
        let ymax = r.full_outputs.states().amax();
        let tol = 10.0 * (ode.tol.atol + ode.tol.rtol * ymax);
        pass &= r.norms.linf <= tol;
        lines.push(format!("L∞ {:.2e} (limit {tol:.2e})", r.norms.linf));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_5() -> Outcome {
    let (net, x_ss) = toy_steady();
    let rs = reduce(&net, &x_ss, "retain = m1 m2; lump = {p1 p2}:2; transform = identity");
    let ra = reduce(&net, &x_ss, "retain = m1 m2; method = averaging; fast = p1 p2");
    let ls = rs.linearized().unwrap();
    let la = ra.linearized().unwrap();
    let sys = linearize_with_order(&net, &x_ss, ra.order(), 2).unwrap();
    let direct = averaged_fluctuation_system(&sys, 2).unwrap();
    let gap = |x: &DMatrix<f64>, y: &DMatrix<f64>| if x.shape() == y.shape() { (x - y).amax() } else { f64::INFINITY };
    let d1 = gap(&ls.a, &la.a).max(gap(&ls.b, &la.b)).max(gap(&ls.c, &la.c));
    let d2 = gap(&ls.a, &direct.a).max(gap(&ls.b, &direct.b)).max(gap(&ls.c, &direct.c));
    outcome(
        d1 <= 1e-12 && d2 <= 1e-12 && rs.order() == ra.order(),
        format!("identity-T structured vs averaging {d1:.1e}, vs Schur block formula {d2:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let (net, x_ss) = toy_steady();
    let sys = linearize_at(&net, &x_ss, &[0, 1, 2, 3]).unwrap();
    let alpha = spectral_abscissa(&sys.a);
    let t_end = 20.0 / alpha.abs();
    let times = uniform_times(0.0, t_end, 201);
    let (_, cov) =
        simulate_lna(&net, &x_ss, &DMatrix::zeros(4, 4), &times, &tight(), CovMode::Interpolate).unwrap();
    let alg = solve_lyapunov_eq(&sys.a, &sys.bbt()).unwrap();
    let rel = (cov.last() - &alg).norm() / alg.norm();

    // Ensemble against the differential solution at an intermediate time.
    let t_mc = 30.0;
    let mc_times = uniform_times(0.0, t_mc, 301);
    let (_, mc_ref) =
        simulate_lna(&net, &x_ss, &DMatrix::zeros(4, 4), &mc_times, &tight(), CovMode::Interpolate).unwrap();
    let opts = PathOptions { n_paths: 10_000, dt: 0.005, t_end: t_mc, seed: 11, record_every: 6000 };
    let ens = fluctuation_ensemble(&FluctuationDynamics::Linear { a: &sys.a, b: &sys.b }, &opts).unwrap();
    let sample = ens.cov.last().unwrap();
    let reference = mc_ref.last();
    let worst = (0..4).map(|i| (sample[(i, i)] / reference[(i, i)] - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        rel <= 1e-6 && worst <= 0.1,
        format!("differential vs algebraic at t = {t_end:.1}: {rel:.1e}; 10⁴-path variance worst relative gap {worst:.3}"),
    )
}

fn toy_reports() -> ReportPair {
    let (net, x_ss) = toy_steady();
    let mut pert = DVector::zeros(4);
    pert[0] = 0.1 * x_ss[0];
    let rs = reduce(&net, &x_ss, "retain = m1 m2; lump = {p1 p2}:1; method = structured");
    let ra = reduce(&net, &x_ss, "retain = m1 m2; method = averaging; fast = p1 p2");
    let opts = CompareOptions::default();
    let s = compare_models(&net, &rs, &pert, &opts).unwrap();
    let a = compare_models(&net, &ra, &pert, &opts).unwrap();
    ReportPair { structured: s, averaging: a, structured_dim: rs.dim() }
}

struct ReportPair {
    structured: ErrorReport,
    averaging: ErrorReport,
    structured_dim: usize,
}

fn criterion_7() -> (Outcome, Outcome) {
    let start = Instant::now();
    let reports = toy_reports();
    let t = start.elapsed();
    let (s, a) = (&reports.structured, &reports.averaging);
    let rel = |r: &ErrorReport| r.norms.linf / r.output_range;
    let a_pass = rel(s) <= 0.05 && rel(a) <= 0.05 && reports.structured_dim == 3;
    let detail_a = format!(
        "L∞/range: structured {:.4} ({}-state model), averaging {:.4}; per-output excursion reading {:.3} / {:.3}",
        rel(s),
        reports.structured_dim,
        rel(a),
        s.norms.linf / s.output_excursion,
        a.norms.linf / a.output_excursion
    );
    let ratio = a.cov_err_ss / s.cov_err_ss;
    let b_pass = s.cov_err_ss < a.cov_err_ss && ratio >= 1.5 && t < Duration::from_secs(30);
    let detail_b = format!(
        "steady-state covariance error: structured {:.3e}, averaging {:.3e}, ratio {ratio:.1}, {:.2}s",
        s.cov_err_ss,
        a.cov_err_ss,
        t.as_secs_f64()
    );
    (outcome(a_pass, detail_a), outcome(b_pass, detail_b))
}

fn criterion_8() -> Outcome {
    let net = toy_network();
    let ode = OdeOptions::default();
    let times = uniform_times(0.0, 30.0, 301);
    let x = simulate_macroscopic(&net, net.x0(), &times, &ode).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    let mut count = 0;
    while count < 10 {
        let t = random_matrix(&mut rng, 4, 4) + DMatrix::identity(4, 4) * 2.0;
        let Ok(tn) = transform_network(&net, &t) else { continue };
        count += 1;
        let m = simulate_macroscopic(&tn, &tn.initial_state(), &times, &ode).unwrap();
        let expect = x.states() * t.transpose();
        let tol = 10.0 * (ode.tol.atol + ode.tol.rtol * expect.amax());
        worst = worst.max((m.states() - expect).amax() / tol);
    }
    outcome(worst <= 1.0, format!("10 transforms: worst |m - T x| is {worst:.3} of the 10x tolerance"))
}

fn criterion_9() -> Outcome {
    let (e, _) = adaptive_norms(|t| DVector::from_vec(vec![(-t).exp()]), 0.0, 20.0, 101).unwrap();
    let analytic = (e.l1 - 1.0).abs() <= 1e-4 && (e.l2 - 0.5f64.sqrt()).abs() <= 1e-4 && (e.linf - 1.0).abs() <= 1e-12;

    let reports = toy_reports();
    let (net, x_ss) = toy_steady();
    let r0 = reduce(&net, &x_ss, "retain = m1 m2; lump = {p1 p2}:0");
    let mut pert = DVector::zeros(4);
    pert[1] = 0.2;
    let extra = compare_models(&net, &r0, &pert, &CompareOptions::default()).unwrap();
    let all = [&reports.structured, &reports.averaging, &extra];
    let holder = all.iter().all(|r| r.norms.l2.powi(2) <= r.norms.linf * r.norms.l1 * (1.0 + 1e-12));
    let mut worst_change = 0.0_f64;
    for r in all {
        let n = 2 * r.norm_samples - 1;
        let times = uniform_times(r.t_span.0, r.t_span.1, n);
        let (ipf, ipr) = (r.full_outputs.interpolator(), r.reduced_outputs.interpolator());
        let vals: Vec<DVector<f64>> = times.iter().map(|&t| ipf.eval(t) - ipr.eval(t)).collect();
        let doubled = norms_on_grid(&times, &vals).unwrap();
        worst_change = worst_change.max(relative_change(&r.norms, &doubled));
    }
    outcome(
        analytic && holder && worst_change < 1e-3,
        format!(
            "e^-t norms ({:.6}, {:.6}, {}), Hölder on {} reports {holder}, doubling change {worst_change:.1e}",
            e.l1,
            e.l2,
            e.linf,
            all.len()
        ),
    )
}

fn relative_change(a: &SignalNorms, b: &SignalNorms) -> f64 {
    let rc = |x: f64, y: f64| if x == y { 0.0 } else { (x - y).abs() / x.abs().max(y.abs()) };
    rc(a.l1, b.l1).max(rc(a.l2, b.l2)).max(rc(a.linf, b.linf))
}

/// Runs the binary and returns its standard output with the output
/// directory masked.
fn run_cli(args: &[&str], out: &Path) -> String {
    let run = Command::new(env!("CARGO_BIN_EXE_lna-mor"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    assert!(run.status.success(), "{args:?}: {}", String::from_utf8_lossy(&run.stderr));
    String::from_utf8_lossy(&run.stdout).replace(out.to_str().unwrap(), "<out>")
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    if !dir.exists() {
        return Vec::new();
    }
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let model = tmp.path().join("toy.lna");
    fs::write(&model, lna_mor::models::TOY_MODEL).unwrap();
    let model = model.to_str().unwrap().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["steady-state", &model],
        vec!["simulate", &model, "--t-end", "20", "--paths", "1000", "--seed", "7"],
        vec!["reduce", &model, "--reduction", "retain=m1,m2; lump={p1,p2}:1", "--dump-gramians"],
        vec![
            "compare",
            &model,
            "--reduction",
            "retain=m1,m2; lump={p1,p2}:1",
            "--reduction",
            "retain=m1,m2; method=averaging",
            "--perturb",
            "m1=+0.1",
        ],
        vec!["check-monotone", &model],
    ];
    let mut identical = true;
    let mut n_files = 0;
    for (i, args) in commands.iter().enumerate() {
        let a = tmp.path().join(format!("run{i}a"));
        let b = tmp.path().join(format!("run{i}b"));
        let (sa, sb) = (run_cli(args, &a), run_cli(args, &b));
        let (ca, cb) = (dir_contents(&a), dir_contents(&b));
        n_files += ca.len();
        identical &= ca == cb && sa == sb;
    }
    outcome(identical && n_files > 0, format!("{} commands run twice, {n_files} files and standard output compared bytewise", commands.len()))
}

#[test]
fn acceptance() {
    let (c7a, c7b) = criterion_7();
    let results = vec![
        ("1", "Lyapunov solver vs Kronecker oracle", criterion_1()),
        ("2", "structured Gramian feasibility", criterion_2()),
        ("3", "balancing and biorthogonality", criterion_3()),
        ("4", "r = 0 reproduces the full model", criterion_4()),
        ("5", "identity transform equals averaging", criterion_5()),
        ("6", "covariance consistency", criterion_6()),
        ("7a", "reduced outputs track the full model", c7a),
        ("7b", "structured covariance beats averaging", c7b),
        ("8", "species transformation property", criterion_8()),
        ("9", "metric self-checks", criterion_9()),
        ("10", "determinism", criterion_10()),
    ];
    // Written to the raw handle so the lines survive the harness's output capture.
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for (id, name, o) in &results {
        writeln!(out, "criterion {id:<3} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail).unwrap();
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
