use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use smallnoise::asymptotics::{gamma_limit, gamma_limit_dtheta, AsymptoticReport};
use smallnoise::estimators::write_results_csv;
use smallnoise::kalman_filter::{comparison_constants, gamma_hat_bound, run_filter_derivatives, solve_riccati};
use smallnoise::mc::harness::Prepared;
use smallnoise::mc::{emit_report, grid_steps, rate_slopes, run_experiment, ExperimentConfig};
use smallnoise::sde_sim::fmt_real;
use smallnoise::{simulate, CoefficientModel, FilterTrajectory, Method, NoiseConfig, RiccatiScheme, SamplePath, TimeGrid};

#[derive(Parser)]
#[command(name = "smallnoise", version, about = "Estimation for partially observed linear systems with small noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file (directory for `mc`). Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Cell {
    /// Observation noise level; defaults to the first `eps` of the config.
    #[arg(long)]
    eps: Option<f64>,
    /// State noise exponent, ψ = ε^δ; defaults to the first `delta` of the config.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one observation path and write it as CSV (t,X[,Y]).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cell: Cell,
        /// Simulation seed; defaults to the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// True parameter; defaults to theta0.
        #[arg(long)]
        theta: Option<f64>,
        /// Grid size; defaults to the refined grid of the experiment.
        #[arg(long)]
        n_steps: Option<usize>,
        /// Include the hidden state column Y.
        #[arg(long)]
        hidden: bool,
    },
    /// Run the filter on an observed path (CSV in, t,m,gamma_star[,m_dot,gamma_star_dot] out).
    Filter {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cell: Cell,
        /// Observation path CSV.
        #[arg(long)]
        input: PathBuf,
        /// Parameter value; defaults to theta0.
        #[arg(long)]
        theta: Option<f64>,
        /// Riccati scheme: continuous or sampled.
        #[arg(long, default_value = "continuous")]
        scheme: String,
        /// Also output the θ-derivatives.
        #[arg(long)]
        derivatives: bool,
    },
    /// Estimate θ from an observed path.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cell: Cell,
        /// Observation path CSV.
        #[arg(long)]
        input: PathBuf,
        /// Estimator (MLE, BAYES, MDE, ONE_STEP, PRELIM); repeatable. Defaults to the config's list.
        #[arg(long)]
        estimator: Vec<String>,
        /// Known true value, used to fill in normalized errors.
        #[arg(long)]
        theta_true: Option<f64>,
    },
    /// Convergence table of γ* and γ̇* to their limits.
    RiccatiCheck {
        #[command(flatten)]
        common: Common,
        /// Parameter value; defaults to theta0.
        #[arg(long)]
        theta: Option<f64>,
        /// Start of the sup window.
        #[arg(long, default_value_t = 0.1)]
        t0: f64,
        /// Noise levels; defaults to 1e-3, 1e-4, 1e-5.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// State noise exponents; defaults to the config's delta list.
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
    },
    /// Run the full Monte Carlo experiment and write the reports.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Overrides the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's estimator list; repeatable.
        #[arg(long)]
        estimator: Vec<String>,
    },
    /// Fisher information, contrasts and identifiability at theta0.
    Asymptotics {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cell: Cell,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::load(path)?)
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn noise_for(cfg: &ExperimentConfig, cell: &Cell) -> Result<NoiseConfig> {
    let eps = cell.eps.unwrap_or(cfg.experiment.eps[0]);
    let delta = cell.delta.unwrap_or(cfg.experiment.delta[0]);
    Ok(NoiseConfig::new(eps, delta)?)
}

fn check_theta(model: &CoefficientModel, theta: f64) -> Result<f64> {
    if !model.domain().contains_closed(theta) {
        bail!(smallnoise::Error::Domain(format!("θ = {theta} outside the parameter set")));
    }
    Ok(theta)
}

fn cmd_simulate(
    common: &Common,
    cell: &Cell,
    seed: Option<u64>,
    theta: Option<f64>,
    n_steps: Option<usize>,
    hidden: bool,
    quiet: bool,
) -> Result<()> {
    let cfg = load_config(&common.config)?;
    let model = cfg.build_model()?;
    let noise = noise_for(&cfg, cell)?;
    let theta = check_theta(&model, theta.unwrap_or(cfg.experiment.theta0))?;
    let n = n_steps.unwrap_or_else(|| {
        grid_steps(&model, theta, &noise, cfg.experiment.n_steps, cfg.experiment.min_steps_per_filter_time)
    });
    let grid = TimeGrid::new(n, model.horizon())?;
    let seed = seed.unwrap_or(cfg.experiment.master_seed);
    let noise = if cfg.experiment.noiseless { noise.silenced() } else { noise };
    let path = simulate(&model, theta, &noise, &grid, seed, hidden)?;
    match &common.out {
        Some(p) => path.save(p)?,
        None => path.write_csv(io::stdout().lock())?,
    }
    if !quiet && common.out.is_some() {
        eprintln!("simulated {} steps (h = {:e}) at θ = {theta}, seed {seed}", n, grid.h());
    }
    Ok(())
}

fn cmd_filter(
    common: &Common,
    cell: &Cell,
    input: &Path,
    theta: Option<f64>,
    scheme: &str,
    derivatives: bool,
) -> Result<()> {
    let cfg = load_config(&common.config)?;
    let model = cfg.build_model()?;
    let noise = noise_for(&cfg, cell)?;
    let theta = check_theta(&model, theta.unwrap_or(cfg.experiment.theta0))?;
    let scheme: RiccatiScheme = scheme.parse()?;
    let obs = SamplePath::load(input)?;
    let traj = FilterTrajectory::compute(&model, theta, noise.eps, noise.psi, &obs, scheme, derivatives)?;
    let mut out = open_out(&common.out)?;
    traj.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_estimate(
    common: &Common,
    cell: &Cell,
    input: &Path,
    estimators: &[String],
    theta_true: Option<f64>,
    quiet: bool,
) -> Result<()> {
    let mut cfg = load_config(&common.config)?;
    if !estimators.is_empty() {
        cfg.experiment.estimators = estimators.to_vec();
    }
    let mut prep = Prepared::from_config(&cfg)?;
    let noise = noise_for(&cfg, cell)?;
    let obs = SamplePath::load(input)?;
    if let Some(t) = theta_true {
        prep.theta0 = check_theta(&prep.model, t)?;
    }
    let mut results = Vec::new();
    for &m in &prep.methods {
        let mut r = prep.estimate(m, &noise, &obs).with_context(|| format!("{m} failed"))?;
        if theta_true.is_none() {
            r.normalized_error = None;
        }
        if !quiet && r.flags.boundary_hit {
            eprintln!("warning: {m} estimate {} is on the boundary of the parameter set", r.estimate);
        }
        results.push(r);
    }
    let mut out = open_out(&common.out)?;
    write_results_csv(&results, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_riccati_check(common: &Common, theta: Option<f64>, t0: f64, eps: &[f64], delta: &[f64]) -> Result<()> {
    let cfg = load_config(&common.config)?;
    let model = cfg.build_model()?;
    let theta = check_theta(&model, theta.unwrap_or(cfg.experiment.theta0))?;
    let eps = if eps.is_empty() { vec![1e-3, 1e-4, 1e-5] } else { eps.to_vec() };
    let delta = if delta.is_empty() { cfg.experiment.delta.clone() } else { delta.to_vec() };
    if !(t0 >= 0.0 && t0 < model.horizon()) {
        bail!(smallnoise::Error::Config(format!("t0 = {t0} outside [0, T)")));
    }
    let (a_m, f_m, big_b, sigma_m) = comparison_constants(&model, theta, 2001);
    let mut out = open_out(&common.out)?;
    writeln!(
        out,
        "eps,delta,psi,ratio,n_steps,sup_gamma_err,gamma_err_over_ratio,sup_gamma_dot_err,gamma_dot_err_over_ratio,bound_ok"
    )?;
    for &d in &delta {
        for &e in &eps {
            let noise = NoiseConfig::new(e, d)?;
            let n = grid_steps(&model, theta, &noise, cfg.experiment.n_steps, 20.0);
            let grid = TimeGrid::new(n, model.horizon())?;
            let gamma = solve_riccati(&model, theta, e, noise.psi, &grid)?;
            let zero = SamplePath::from_observations(grid, vec![0.0; grid.len()])?;
            let m = vec![model.y0(); grid.len()];
            let (_, gamma_dot) = run_filter_derivatives(&model, theta, e, noise.psi, &zero, &gamma, &m)?;
            let (mut sup, mut sup_dot, mut bound_ok) = (0.0f64, 0.0f64, true);
            for i in 0..grid.len() {
                let t = grid.t(i);
                bound_ok &= gamma[i] <= gamma_hat_bound(a_m, f_m, big_b, sigma_m, e, noise.psi, t) * (1.0 + 1e-9) + 1e-14;
                if t >= t0 {
                    sup = sup.max((gamma[i] - gamma_limit(&model, theta, t)).abs());
                    sup_dot = sup_dot.max((gamma_dot[i] - gamma_limit_dtheta(&model, theta, t)).abs());
                }
            }
            let ratio = noise.ratio();
            writeln!(
                out,
                "{},{},{},{},{n},{},{},{},{},{bound_ok}",
                fmt_real(e),
                fmt_real(d),
                fmt_real(noise.psi),
                fmt_real(ratio),
                fmt_real(sup),
                fmt_real(sup / ratio),
                fmt_real(sup_dot),
                fmt_real(sup_dot / ratio)
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_mc(common: &Common, seed: Option<u64>, estimators: &[String], quiet: bool) -> Result<()> {
    let mut cfg = load_config(&common.config)?;
    if let Some(s) = seed {
        cfg.experiment.master_seed = s;
    }
    if !estimators.is_empty() {
        cfg.experiment.estimators = estimators.to_vec();
        cfg.validate()?;
    }
    let out_dir = common.out.clone().unwrap_or_else(|| cfg.experiment.output_dir.clone());
    let summary = run_experiment(&cfg)?;
    let files = emit_report(&summary, &out_dir)?;
    if !quiet {
        println!("I(theta0) = {}", summary.fisher);
        println!("{:>8} {:>6} {:>9} {:>5} {:>10} {:>10} {:>10} {:>8} {:>10}", "eps", "delta", "estimator", "n_ok", "mean", "variance", "raw_rmse", "ks", "ref_var");
        for cell in &summary.cells {
            for m in &cell.methods {
                let (mean, var, ks) = m
                    .stats
                    .as_ref()
                    .map_or((f64::NAN, f64::NAN, f64::NAN), |s| (s.mean, s.variance, s.ks_distance));
                println!(
                    "{:>8.1e} {:>6} {:>9} {:>5} {:>10.4} {:>10.4} {:>10.3e} {:>8.4} {:>10.4}",
                    cell.eps, cell.delta, m.method.id(), m.n_ok, mean, var, m.raw_rmse, ks, m.reference_variance
                );
            }
        }
        for (delta, method, slope) in rate_slopes(&summary) {
            println!("rate slope {method} at delta = {delta}: {slope:.4} (theory {:.4})", (1.0 - delta) / 2.0);
        }
        for f in files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn cmd_asymptotics(common: &Common, cell: &Cell) -> Result<()> {
    let cfg = load_config(&common.config)?;
    let model = cfg.build_model()?;
    let noise = noise_for(&cfg, cell)?;
    let nu = cfg.experiment.identifiability_nu * model.domain().width();
    let theta0 = cfg.experiment.theta0;
    let report = AsymptoticReport::build(&model, theta0, noise.eps, noise.delta, nu, 201)?;
    let mut out = open_out(&common.out)?;
    out.write_all(report.to_key_value().as_bytes())?;
    if cfg.methods()?.contains(&Method::OneStep) {
        let tau = cfg.one_step.tau;
        writeln!(out, "tau={}", fmt_real(tau))?;
        writeln!(out, "fisher_tau_T={}", fmt_real(report.fisher_partial(tau, model.horizon())?))?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    match &cli.command {
        Command::Simulate {
            common,
            cell,
            seed,
            theta,
            n_steps,
            hidden,
        } => cmd_simulate(common, cell, *seed, *theta, *n_steps, *hidden, quiet),
        Command::Filter {
            common,
            cell,
            input,
            theta,
            scheme,
            derivatives,
        } => cmd_filter(common, cell, input, *theta, scheme, *derivatives),
        Command::Estimate {
            common,
            cell,
            input,
            estimator,
            theta_true,
        } => cmd_estimate(common, cell, input, estimator, *theta_true, quiet),
        Command::RiccatiCheck {
            common,
            theta,
            t0,
            eps,
            delta,
        } => cmd_riccati_check(common, *theta, *t0, eps, delta),
        Command::Mc { common, seed, estimator } => cmd_mc(common, *seed, estimator, quiet),
        Command::Asymptotics { common, cell } => cmd_asymptotics(common, cell),
    }
}

/// 2 for bad input or configuration, 3 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<smallnoise::Error>() {
            use smallnoise::Error as E;
            return match e {
                E::Numerical { .. } | E::Estimation(_) | E::Singular(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
