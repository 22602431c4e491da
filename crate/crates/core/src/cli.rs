//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when the numerics fail
//! (infeasible Gramian structure, divergence, singular constraints).

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::gramians::{metzler_violations, BlockMode};
use crate::linalg::write_matrix;
use crate::lna::{
    fluctuation_ensemble, jacobian_j, simulate_lna, steady_state, uniform_times, CovMode, FluctuationDynamics,
    OdeOptions, PathOptions, SteadyState, SteadyStateOptions, Tolerances,
};
use crate::metrics::{compare_models, suggested_horizon, CompareOptions, ErrorReport};
use crate::netparse::{parse_network, KineticModel, ReactionNetwork};
use crate::reduction::{parse_reduction_config, simulate_reduced, ReducedModel, ReductionConfig};
use crate::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lna-mor", version, about = "Model order reduction of the Linear Noise Approximation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the macroscopic steady state; writes steady_state.csv.
    SteadyState(CommonArgs),
    /// Integrate the LNA; writes trajectory.csv, covariance.csv and, with
    /// --paths, paths_summary.csv.
    Simulate(SimulateArgs),
    /// Reduce a network; writes reduced_model.txt, reduced_trajectory.csv,
    /// reduced_outputs.csv and reduced_covariance.csv.
    Reduce(ReduceArgs),
    /// Compare reduced models against the full network; writes one report
    /// per configuration and summary.csv.
    Compare(CompareArgs),
    /// Report whether J(x_ss) is Metzler and list the violating entries.
    CheckMonotone(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlockModeArg {
    Two,
    PerGroup,
}

impl From<BlockModeArg> for BlockMode {
    fn from(b: BlockModeArg) -> Self {
        match b {
            BlockModeArg::Two => BlockMode::Two,
            BlockModeArg::PerGroup => BlockMode::PerGroup,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Network description file.
    pub model: PathBuf,
    /// System volume Ω (default: the model's `volume`, else 100).
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 50.0)]
    pub t_end: f64,
    /// Number of reported time points.
    #[arg(long, default_value_t = 501)]
    pub samples: usize,
    /// Initial-state changes, e.g. `m1=+0.1,p1=-10%`.
    #[arg(long)]
    pub perturb: Option<String>,
    /// Sample this many fluctuation paths (Euler-Maruyama).
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reduction config, e.g. `retain=m1,m2; lump={p1,p2}:1; method=structured`,
    /// or `@path` to read it from a file.
    #[arg(long)]
    pub reduction: String,
    #[arg(long, value_enum)]
    pub block_mode: Option<BlockModeArg>,
    /// Also write P.txt and Q.txt.
    #[arg(long)]
    pub dump_gramians: bool,
    /// Horizon of the reduced simulation (default: decay time of J(x_ss)).
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 501)]
    pub samples: usize,
    /// Offset of the reduced simulation's start from x_ss, e.g. `m1=+0.1`.
    #[arg(long)]
    pub perturb: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reduction config; repeat for several configurations.
    #[arg(long)]
    pub reduction: Vec<String>,
    /// File with one reduction config per line.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub block_mode: Option<BlockModeArg>,
    /// Offset of the initial state from x_ss, e.g. `m1=+0.1` or `m1=+10%`.
    #[arg(long)]
    pub perturb: Option<String>,
    /// Comparison horizon (default: decay time of J(x_ss)).
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    pub samples: usize,
}

fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Error {
    let context = context.into();
    move |source| Error::Io { context, source }
}

fn load_network(c: &CommonArgs) -> Result<ReactionNetwork, Error> {
    let text = fs::read_to_string(&c.model).map_err(io_err(format!("cannot read model {}", c.model.display())))?;
    let net = parse_network(&text)?;
    Ok(match c.omega {
        Some(omega) => net.with_volume(omega)?,
        None => net,
    })
}

fn ode_options(c: &CommonArgs) -> Result<OdeOptions, Error> {
    let tol = Tolerances::new(c.rtol, c.atol);
    tol.validate().map_err(|e| input(e.to_string()))?;
    Ok(OdeOptions::from(tol))
}

fn check_horizon(t_end: f64, samples: usize) -> Result<(), Error> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(input(format!("--t-end must be positive, got {t_end}")));
    }
    if samples < 2 {
        return Err(input("--samples must be at least 2"));
    }
    Ok(())
}

/// Parses `name=+d`, `name=-d` or `name=d` (absolute) and `name=+p%`
/// (relative to `base`), comma separated.
pub fn parse_perturbation(spec: &str, net: &ReactionNetwork, base: &DVector<f64>) -> Result<DVector<f64>, Error> {
    let mut d = DVector::zeros(base.len());
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| input(format!("perturbation `{item}` is not of the form species=delta")))?;
        let idx = net
            .species_index(name.trim())
            .ok_or_else(|| input(format!("perturbation names unknown species `{}`", name.trim())))?;
        let value = value.trim();
        let (num, relative) = match value.strip_suffix('%') {
            Some(v) => (v, true),
            None => (value, false),
        };
        let v: f64 = num.trim().parse().map_err(|_| input(format!("invalid perturbation value `{value}`")))?;
        if !v.is_finite() {
            return Err(input(format!("perturbation of `{name}` is not finite")));
        }
        d[idx] += if relative { v / 100.0 * base[idx] } else { v };
    }
    Ok(d)
}

fn read_reduction(arg: &str) -> Result<ReductionConfig, Error> {
    let text = match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(io_err(format!("cannot read reduction config {path}")))?,
        None => arg.to_string(),
    };
    Ok(parse_reduction_config(&text)?)
}

fn create_out(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(io_err(format!("cannot create {}", dir.display())))
}

fn write_out<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf, Error>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let ctx = format!("cannot write {}", path.display());
    let file = File::create(&path).map_err(io_err(ctx.clone()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(ctx))?;
    Ok(path)
}

fn find_steady_state(net: &ReactionNetwork, ode: &OdeOptions) -> Result<SteadyState, Error> {
    let opts = SteadyStateOptions { ode: ode.clone(), ..SteadyStateOptions::default() };
    let ss = steady_state(net, net.x0(), &opts)?;
    for w in &ss.warnings {
        eprintln!("warning: {w}");
    }
    Ok(ss)
}

fn stable_steady_state(net: &ReactionNetwork, ode: &OdeOptions) -> Result<SteadyState, Error> {
    let ss = find_steady_state(net, ode)?;
    if !ss.hurwitz {
        return Err(crate::lna::LnaError::NotHurwitz { abscissa: ss.spectral_abscissa }.into());
    }
    Ok(ss)
}

fn cmd_steady_state(c: &CommonArgs) -> Result<(), Error> {
    let net = load_network(c)?;
    let ode = ode_options(c)?;
    let ss = find_steady_state(&net, &ode)?;
    create_out(&c.out)?;
    println!("omega {}", net.volume());
    for (name, v) in net.species().iter().zip(ss.x.iter()) {
        println!("{name} {v:.12e}");
    }
    println!("residual {:.3e}", ss.residual);
    println!("spectral_abscissa {:.6e}", ss.spectral_abscissa);
    println!("hurwitz {}", ss.hurwitz);
    write_out(&c.out, "steady_state.csv", |w| {
        writeln!(w, "species,x_ss")?;
        for (name, v) in net.species().iter().zip(ss.x.iter()) {
            writeln!(w, "{name},{v:.16e}")?;
        }
        Ok(())
    })?;
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), Error> {
    let net = load_network(&a.common)?;
    let ode = ode_options(&a.common)?;
    check_horizon(a.t_end, a.samples)?;
    let mut x0 = net.x0().clone();
    if let Some(p) = &a.perturb {
        x0 += parse_perturbation(p, &net, &x0)?;
    }
    if let Some(0 | 1) = a.paths {
        return Err(input("--paths needs at least 2 paths"));
    }
    if !(a.dt > 0.0 && a.dt < a.t_end) {
        return Err(input(format!("--dt must lie in (0, t_end), got {}", a.dt)));
    }
    let n = net.n_species();
    let times = uniform_times(0.0, a.t_end, a.samples);
    let (traj, cov) = simulate_lna(&net, &x0, &DMatrix::zeros(n, n), &times, &ode, CovMode::Interpolate)?;
    create_out(&a.common.out)?;
    write_out(&a.common.out, "trajectory.csv", |w| traj.write_csv(w))?;
    write_out(&a.common.out, "covariance.csv", |w| cov.write_csv(w))?;
    if let Some(n_paths) = a.paths {
        let steps = (a.t_end / a.dt).round().max(1.0);
        let record_every = ((steps / (a.samples - 1) as f64).round() as usize).max(1);
        let opts = PathOptions { n_paths, dt: a.dt, t_end: a.t_end, seed: a.seed, record_every };
        let ens = fluctuation_ensemble(&FluctuationDynamics::AlongTrajectory { model: &net, trajectory: &traj }, &opts)?;
        write_out(&a.common.out, "paths_summary.csv", |w| ens.write_csv(w))?;
    }
    println!("omega {}", net.volume());
    println!("final state {}", fmt_vec(&traj.last_state()));
    println!("wrote {}", a.common.out.display());
    Ok(())
}

fn fmt_vec(v: &DVector<f64>) -> String {
    v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(" ")
}

fn configured(arg: &str, block_mode: Option<BlockModeArg>) -> Result<ReductionConfig, Error> {
    let mut cfg = read_reduction(arg)?;
    if let Some(b) = block_mode {
        cfg.block_mode = Some(b.into());
    }
    Ok(cfg)
}

fn horizon(net: &ReactionNetwork, rm: &ReducedModel, t_end: Option<f64>, pert: &DVector<f64>, atol: f64) -> Result<f64, Error> {
    match t_end {
        Some(t) => Ok(t),
        None => Ok(suggested_horizon(net, &rm.x_ss, pert.amax(), atol)?),
    }
}

fn cmd_reduce(a: &ReduceArgs) -> Result<(), Error> {
    let net = load_network(&a.common)?;
    let ode = ode_options(&a.common)?;
    let cfg = configured(&a.reduction, a.block_mode)?;
    let ss = stable_steady_state(&net, &ode)?;
    let rm = cfg.reduce(&net, &ss.x)?;
    let pert = match &a.perturb {
        Some(p) => parse_perturbation(p, &net, &ss.x)?,
        None => DVector::zeros(net.n_species()),
    };
    let t_end = horizon(&net, &rm, a.t_end, &pert, a.common.atol)?;
    check_horizon(t_end, a.samples)?;
    let sim = simulate_reduced(&rm, &(&ss.x + &pert), &uniform_times(0.0, t_end, a.samples), &ode)?;

    create_out(&a.common.out)?;
    let description = rm.describe()?;
    write_out(&a.common.out, "reduced_model.txt", |w| {
        writeln!(w, "omega: {}", net.volume())?;
        writeln!(w, "x_ss: {}", fmt_vec(&ss.x))?;
        write!(w, "{description}")
    })?;
    write_out(&a.common.out, "reduced_trajectory.csv", |w| sim.states.write_csv(w))?;
    write_out(&a.common.out, "reduced_outputs.csv", |w| sim.outputs.write_csv(w))?;
    write_out(&a.common.out, "reduced_covariance.csv", |w| sim.output_cov.write_csv(w))?;
    if a.dump_gramians {
        match &rm.gramians {
            Some(g) => {
                write_out(&a.common.out, "P.txt", |w| write_matrix(w, &g.p))?;
                write_out(&a.common.out, "Q.txt", |w| write_matrix(w, &g.q))?;
            }
            None => eprintln!("warning: the {} method computes no Gramians", rm.method.name()),
        }
    }
    print!("{}", description.lines().take_while(|l| !l.starts_with("W ")).map(|l| format!("{l}\n")).collect::<String>());
    println!("max algebraic residual {:.3e}", sim.max_algebraic_residual);
    println!("wrote {}", a.common.out.display());
    Ok(())
}

fn sweep_configs(path: &Path) -> Result<Vec<String>, Error> {
    let text = fs::read_to_string(path).map_err(io_err(format!("cannot read sweep file {}", path.display())))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn summary_row(i: usize, r: &ErrorReport) -> String {
    format!(
        "{},{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
        i + 1,
        r.method,
        r.partition,
        r.r,
        r.norms.l1,
        r.norms.l2,
        r.norms.linf,
        r.norms.linf / r.output_range,
        r.norms.linf / r.output_excursion,
        r.cov_err_ss
    )
}

fn cmd_compare(a: &CompareArgs) -> Result<(), Error> {
    let net = load_network(&a.common)?;
    let ode = ode_options(&a.common)?;
    let mut specs = a.reduction.clone();
    if let Some(p) = &a.sweep {
        specs.extend(sweep_configs(p)?);
    }
    if specs.is_empty() {
        return Err(input("compare needs at least one --reduction or a --sweep file"));
    }
    let configs = specs.iter().map(|s| configured(s, a.block_mode)).collect::<Result<Vec<_>, _>>()?;
    if a.samples < 3 {
        return Err(input("--samples must be at least 3"));
    }
    if let Some(t) = a.t_end {
        check_horizon(t, a.samples)?;
    }
    let ss = stable_steady_state(&net, &ode)?;
    let pert = match &a.perturb {
        Some(p) => parse_perturbation(p, &net, &ss.x)?,
        None => DVector::zeros(net.n_species()),
    };
    // Every configuration shares one horizon so the reports are comparable.
    let t_end = match a.t_end {
        Some(t) => t,
        None => suggested_horizon(&net, &ss.x, pert.amax(), a.common.atol)?,
    };
    let opts = CompareOptions { t_end: Some(t_end), ode, n_samples: a.samples };
    let reports = configs
        .par_iter()
        .map(|cfg| {
            let rm = cfg.reduce(&net, &ss.x)?;
            Ok(compare_models(&net, &rm, &pert, &opts)?)
        })
        .collect::<Result<Vec<ErrorReport>, Error>>()?;

    create_out(&a.common.out)?;
    for (i, r) in reports.iter().enumerate() {
        let stem = format!("report_{}_{}", i + 1, r.method);
        write_out(&a.common.out, &format!("{stem}.txt"), |w| write!(w, "{}", r.to_text()))?;
        write_out(&a.common.out, &format!("{stem}.csv"), |w| r.write_csv(w))?;
        write_out(&a.common.out, &format!("{stem}_cov_error.csv"), |w| r.write_cov_error_csv(w))?;
    }
    let header = "config,method,partition,r,l1,l2,linf,linf_rel_range,linf_rel_excursion,cov_err_ss";
    write_out(&a.common.out, "summary.csv", |w| {
        writeln!(w, "{header}")?;
        for (i, r) in reports.iter().enumerate() {
            writeln!(w, "{}", summary_row(i, r))?;
        }
        Ok(())
    })?;
    println!("omega {}  t_end {t_end:.6e}", net.volume());
    println!("{header}");
    for (i, r) in reports.iter().enumerate() {
        println!("{}", summary_row(i, r));
    }
    if reports.len() > 1 {
        let mut idx: Vec<usize> = (0..reports.len()).collect();
        idx.sort_by(|&x, &y| reports[x].cov_err_ss.total_cmp(&reports[y].cov_err_ss));
        let order: Vec<String> = idx.iter().map(|&i| format!("{} ({})", i + 1, reports[i].method)).collect();
        println!("covariance error, smallest first: {}", order.join(" < "));
    }
    Ok(())
}

fn cmd_check_monotone(c: &CommonArgs) -> Result<(), Error> {
    let net = load_network(c)?;
    let ode = ode_options(c)?;
    let ss = find_steady_state(&net, &ode)?;
    if !ss.hurwitz {
        eprintln!(
            "warning: steady-state verification failed: J(x_ss) is not Hurwitz (spectral abscissa {:.3e})",
            ss.spectral_abscissa
        );
    }
    let j = jacobian_j(&net, &ss.x)?;
    let v = metzler_violations(&j);
    let names = net.species();
    if v.is_empty() {
        println!("Metzler: yes");
    } else {
        println!("not Metzler: {} violating entries", v.len());
        for e in &v {
            println!("  J[{}, {}] = {:.6e}", names[e.row], names[e.col], e.value);
        }
    }
    Ok(())
}

/// Runs a parsed command.
pub fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::SteadyState(c) => cmd_steady_state(c),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Compare(a) => cmd_compare(a),
        Command::CheckMonotone(c) => cmd_check_monotone(c),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::toy_network;

    #[test]
    fn perturbation_forms() {
        let net = toy_network();
        let base = DVector::from_vec(vec![2.0, 1.0, 1.0, 1.0]);
        let d = parse_perturbation("m1=+0.1, p2=-50%", &net, &base).unwrap();
        assert_eq!(d.as_slice(), &[0.1, 0.0, 0.0, -0.5]);
        assert_eq!(parse_perturbation("m1=+10%", &net, &base).unwrap()[0], 0.2);
        assert!(parse_perturbation("zz=1", &net, &base).is_err());
        assert!(parse_perturbation("m1", &net, &base).is_err());
        assert!(parse_perturbation("m1=abc", &net, &base).is_err());
    }

    #[test]
    fn help_exits_zero_and_bad_flag_exits_two() {
        assert_eq!(main_with_args(["lna-mor", "--help"]), 0);
        assert_eq!(main_with_args(["lna-mor", "simulate"]), EXIT_INPUT);
        assert_eq!(main_with_args(["lna-mor", "steady-state", "/nonexistent/model.lna"]), EXIT_INPUT);
    }
}
