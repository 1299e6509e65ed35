//! The replicate runner. Every (ε, δ) pair is a cell; replicate `r` of
//! cell `c` simulates with seed `derive_seed(master, c·2³² + r)` and runs
//! each requested estimator on the same path. Replicates may execute on any
//! number of workers; results are collected in replicate order.

use crate::asymptotics::{check_identifiability_h, check_identifiability_s, fisher_information};
use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::estimators::{
    bayes_estimate_scheme, mde, mle_scheme, one_step_mle_process_scheme, preliminary_estimator_bar, snap_tau,
    EstimationFlags, EstimationResult, Method, PriorSpec, SearchConfig,
};
use crate::kalman_filter::RiccatiScheme;
use crate::sde_sim::{derive_seed, simulate, NoiseConfig, SamplePath, TimeGrid};

use super::config::ExperimentConfig;
use super::stats::{rms, summarize, Stats};

pub fn cell_seed(master: u64, cell: usize, replicate: usize) -> u64 {
    derive_seed(master, ((cell as u64) << 32) | replicate as u64)
}

/// Grid size for one cell: `n_steps`, raised if needed so that the filter
/// time constant `ε/(ψ max f b/σ)` spans at least `min_steps` steps.
pub fn grid_steps(model: &CoefficientModel, theta0: f64, noise: &NoiseConfig, n_steps: usize, min_steps: f64) -> usize {
    if min_steps <= 0.0 {
        return n_steps;
    }
    let speed = (0..=1000)
        .map(|k| {
            let c = model.sample(theta0, model.horizon() * k as f64 / 1000.0);
            (c.f * c.b / c.sigma).abs()
        })
        .fold(0.0, f64::max);
    let needed = (min_steps * model.horizon() * speed / noise.ratio()).ceil();
    if needed.is_finite() {
        n_steps.max(needed as usize)
    } else {
        n_steps
    }
}

/// Everything needed to run replicates, resolved once from the config.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub model: CoefficientModel,
    pub theta0: f64,
    pub methods: Vec<Method>,
    pub scheme: RiccatiScheme,
    pub prior: PriorSpec,
    pub search: SearchConfig,
    pub n_quad: usize,
    pub tau: f64,
    pub preliminary: Method,
    pub master_seed: u64,
    pub noiseless: bool,
}

impl Prepared {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let methods = cfg.methods()?;
        Ok(Prepared {
            model: cfg.build_model()?,
            theta0: cfg.experiment.theta0,
            prior: if methods.contains(&Method::Bayes) {
                cfg.prior_spec()?
            } else {
                PriorSpec::Uniform
            },
            methods,
            scheme: cfg.scheme()?,
            search: cfg.search_config(),
            n_quad: cfg.bayes.n_quad,
            tau: cfg.one_step.tau,
            preliminary: cfg.preliminary_method()?,
            master_seed: cfg.experiment.master_seed,
            noiseless: cfg.experiment.noiseless,
        })
    }

    /// Runs one estimator on `obs`, normalizing against `θ0`.
    pub fn estimate(&self, method: Method, noise: &NoiseConfig, obs: &SamplePath) -> Result<EstimationResult> {
        let (eps, psi) = (noise.eps, noise.psi);
        let rate = (eps / psi).sqrt();
        let y0 = self.model.y0();
        let theta0 = Some(self.theta0);
        match method {
            Method::Mle => Ok(mle_scheme(&self.model, eps, psi, obs, &self.search, self.scheme)?.normalize(theta0, rate)),
            Method::Bayes => Ok(
                bayes_estimate_scheme(&self.model, eps, psi, obs, &self.prior, self.n_quad, self.scheme)?
                    .normalize(theta0, rate),
            ),
            Method::Mde => Ok(mde(&self.model, obs, &self.search, y0)?.normalize(theta0, eps.max(psi))),
            Method::Prelim => Ok(preliminary_estimator_bar(obs, &self.model, y0, noise.ratio())?.normalize(theta0, rate)),
            Method::OneStep => {
                let prelim = match self.preliminary {
                    Method::Prelim => preliminary_estimator_bar(obs, &self.model, y0, noise.ratio())?,
                    m => {
                        let head = obs.truncate(snap_tau(&obs.grid, self.tau)?)?;
                        match m {
                            Method::Mle => mle_scheme(&self.model, eps, psi, &head, &self.search, self.scheme)?,
                            _ => mde(&self.model, &head, &self.search, y0)?,
                        }
                    }
                };
                let process = one_step_mle_process_scheme(&self.model, obs, &prelim, self.tau, eps, psi, self.scheme)?;
                let raw = process.final_estimate();
                if !raw.is_finite() {
                    return Err(Error::Estimation("non-finite one-step estimate".into()));
                }
                let domain = self.model.domain();
                let estimate = domain.clamp(raw);
                Ok(EstimationResult {
                    method: Method::OneStep,
                    estimate,
                    objective: raw - prelim.estimate,
                    normalized_error: None,
                    n_evals: prelim.n_evals + 1,
                    flags: EstimationFlags {
                        boundary_hit: estimate == domain.lo || estimate == domain.hi,
                        clamped: estimate != raw,
                        flat: false,
                    },
                }
                .normalize(theta0, rate))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellSpec {
    pub index: usize,
    pub noise: NoiseConfig,
    pub grid: TimeGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    /// Per requested method, the result or the error message.
    pub outcomes: Vec<(Method, std::result::Result<EstimationResult, String>)>,
}

impl ReplicateRecord {
    pub fn get(&self, method: Method) -> Option<&EstimationResult> {
        self.outcomes
            .iter()
            .find(|(m, _)| *m == method)
            .and_then(|(_, r)| r.as_ref().ok())
    }
}

/// Simulates replicate `r` of `cell` and runs every requested estimator.
pub fn run_replicate(prep: &Prepared, cell: &CellSpec, r: usize) -> Result<ReplicateRecord> {
    let seed = cell_seed(prep.master_seed, cell.index, r);
    let noise = if prep.noiseless { cell.noise.silenced() } else { cell.noise };
    let obs = simulate(&prep.model, prep.theta0, &noise, &cell.grid, seed, false)?;
    let outcomes = prep
        .methods
        .iter()
        .map(|&m| (m, prep.estimate(m, &cell.noise, &obs).map_err(|e| e.to_string())))
        .collect();
    Ok(ReplicateRecord { index: r, seed, outcomes })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub n_ok: usize,
    pub n_failed: usize,
    /// `None` with fewer than two successful replicates.
    pub stats: Option<Stats>,
    /// RMSE of `θ̂ − θ0` (not normalized).
    pub raw_rmse: f64,
    pub boundary_fraction: f64,
    /// Limit variance of the normalized error, when known.
    pub reference_variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub index: usize,
    pub eps: f64,
    pub delta: f64,
    pub psi: f64,
    pub n_steps: usize,
    pub h: f64,
    pub replicates: Vec<ReplicateRecord>,
    pub methods: Vec<MethodSummary>,
}

impl CellSummary {
    /// Normalized errors of the successful replicates, in replicate order.
    pub fn normalized_errors(&self, method: Method) -> Vec<f64> {
        self.replicates
            .iter()
            .filter_map(|r| r.get(method).and_then(|e| e.normalized_error))
            .collect()
    }

    /// Estimates per replicate (`None` where the estimator failed).
    pub fn estimates(&self, method: Method) -> Vec<Option<f64>> {
        self.replicates.iter().map(|r| r.get(method).map(|e| e.estimate)).collect()
    }

    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// File-name label, e.g. `eps1e-4_delta0.25`.
    pub fn label(&self) -> String {
        format!("eps{:e}_delta{}", self.eps, self.delta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McSummary {
    pub theta0: f64,
    /// `I(θ0)`.
    pub fisher: f64,
    pub cells: Vec<CellSummary>,
}

impl McSummary {
    pub fn empty(theta0: f64, fisher: f64) -> Self {
        McSummary {
            theta0,
            fisher,
            cells: Vec::new(),
        }
    }

    pub fn cell(&self, eps: f64, delta: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.eps == eps && c.delta == delta)
    }
}

fn identifiability_gate(cfg: &ExperimentConfig, prep: &Prepared) -> Result<()> {
    let model = &prep.model;
    let nu = cfg.experiment.identifiability_nu * model.domain().width();
    let uses = |m: Method| prep.methods.contains(&m);
    let needs_s = uses(Method::Mle) || uses(Method::Bayes) || uses(Method::OneStep);
    let needs_h = uses(Method::Mde) || (uses(Method::OneStep) && prep.preliminary == Method::Mde);
    let mut failures = Vec::new();
    if needs_s {
        let c = check_identifiability_s(model, prep.theta0, nu, 201)?;
        if !c.identifiable {
            failures.push(format!("S-contrast minimum {:e} outside ν = {nu}", c.min_value));
        }
    }
    if needs_h {
        let grid = TimeGrid::new(1000, model.horizon())?;
        let c = check_identifiability_h(model, prep.theta0, nu, model.y0(), 201, &grid)?;
        if !c.identifiable {
            failures.push(format!("H-contrast minimum {:e} outside ν = {nu}", c.min_value));
        }
    }
    if failures.is_empty() || cfg.experiment.negative_control {
        Ok(())
    } else {
        Err(Error::Identifiability(format!(
            "{} (set experiment.negative_control = true to run anyway)",
            failures.join("; ")
        )))
    }
}

#[cfg(feature = "parallel")]
fn run_cell_replicates(prep: &Prepared, cell: &CellSpec, n: usize) -> Result<Vec<ReplicateRecord>> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(|r| run_replicate(prep, cell, r)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_cell_replicates(prep: &Prepared, cell: &CellSpec, n: usize) -> Result<Vec<ReplicateRecord>> {
    (0..n).map(|r| run_replicate(prep, cell, r)).collect()
}

fn summarize_method(
    method: Method,
    replicates: &[ReplicateRecord],
    theta0: f64,
    reference_variance: f64,
) -> MethodSummary {
    let ok: Vec<&EstimationResult> = replicates.iter().filter_map(|r| r.get(method)).collect();
    let errors: Vec<f64> = ok.iter().filter_map(|e| e.normalized_error).collect();
    let raw: Vec<f64> = ok.iter().map(|e| e.estimate - theta0).collect();
    let fisher_ref = if reference_variance > 0.0 { 1.0 / reference_variance } else { 0.0 };
    MethodSummary {
        method,
        n_ok: ok.len(),
        n_failed: replicates.len() - ok.len(),
        stats: summarize(&errors, fisher_ref).ok(),
        raw_rmse: if raw.is_empty() { f64::NAN } else { rms(&raw) },
        boundary_fraction: if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().filter(|e| e.flags.boundary_hit).count() as f64 / ok.len() as f64
        },
        reference_variance,
    }
}

/// Runs every cell of the experiment. Deterministic given the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<McSummary> {
    let prep = Prepared::from_config(cfg)?;
    identifiability_gate(cfg, &prep)?;
    let model = &prep.model;
    let fisher = fisher_information(model, prep.theta0, 0.0, model.horizon())?;
    let reference = |m: Method| -> Result<f64> {
        let info = match m {
            Method::Mle | Method::Bayes => fisher,
            Method::OneStep => fisher_information(model, prep.theta0, prep.tau, model.horizon())?,
            Method::Mde | Method::Prelim => 0.0,
        };
        Ok(if info > 0.0 { 1.0 / info } else { f64::NAN })
    };

    let mut summary = McSummary::empty(prep.theta0, fisher);
    let x = &cfg.experiment;
    for (ei, &eps) in x.eps.iter().enumerate() {
        for (di, &delta) in x.delta.iter().enumerate() {
            let noise = NoiseConfig::new(eps, delta)?;
            let n = grid_steps(model, prep.theta0, &noise, x.n_steps, x.min_steps_per_filter_time);
            let cell = CellSpec {
                index: ei * x.delta.len() + di,
                noise,
                grid: TimeGrid::new(n, model.horizon())?,
            };
            let replicates = run_cell_replicates(&prep, &cell, x.n_replicates)?;
            let methods = prep
                .methods
                .iter()
                .map(|&m| Ok(summarize_method(m, &replicates, prep.theta0, reference(m)?)))
                .collect::<Result<Vec<_>>>()?;
            summary.cells.push(CellSummary {
                index: cell.index,
                eps,
                delta,
                psi: noise.psi,
                n_steps: n,
                h: cell.grid.h(),
                replicates,
                methods,
            });
        }
    }
    Ok(summary)
}
