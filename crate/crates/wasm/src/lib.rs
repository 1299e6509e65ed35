//! Browser bindings: simulate and filter a path, profile its likelihood, and
//! tabulate the Riccati convergence.

use wasm_bindgen::prelude::*;

use smallnoise::asymptotics::gamma_limit;
use smallnoise::estimators::{log_likelihood, mle, SearchConfig};
use smallnoise::kalman_filter::{run_filter, solve_riccati};
use smallnoise::{builtin_model, simulate, CoefficientModel, Family, NoiseConfig, Params, SamplePath, TimeGrid};

const HORIZON: f64 = 1.0;
const MAX_STEPS: usize = 200_000;

fn js_err(e: smallnoise::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn model_for(family: &str, y0: f64) -> smallnoise::Result<CoefficientModel> {
    let family: Family = family.parse()?;
    let domain = match family {
        Family::Const => (0.5, 4.0),
        _ => (0.5, 2.0),
    };
    builtin_model(family, &Params::new(), domain, HORIZON, y0)
}

/// One simulated path with its filter at the true parameter.
#[wasm_bindgen]
pub struct Session {
    model: CoefficientModel,
    noise: NoiseConfig,
    obs: SamplePath,
    m: Vec<f64>,
    gamma: Vec<f64>,
}

impl Session {
    pub fn build(family: &str, y0: f64, theta: f64, eps: f64, delta: f64, n_steps: usize, seed: u32) -> smallnoise::Result<Self> {
        if n_steps > MAX_STEPS {
            return Err(smallnoise::Error::Config(format!("at most {MAX_STEPS} steps in the browser")));
        }
        let model = model_for(family, y0)?;
        let noise = NoiseConfig::new(eps, delta)?;
        let grid = TimeGrid::new(n_steps, HORIZON)?;
        let obs = simulate(&model, theta, &noise, &grid, seed as u64, true)?;
        let gamma = solve_riccati(&model, theta, eps, noise.psi, &grid)?;
        let m = run_filter(&model, theta, eps, noise.psi, &obs, &gamma)?;
        Ok(Session { model, noise, obs, m, gamma })
    }

    pub fn profile(&self, n_points: usize) -> smallnoise::Result<Vec<f64>> {
        let lattice = self.model.domain().lattice(n_points.max(2));
        let mut out = Vec::with_capacity(2 * lattice.len());
        for theta in lattice {
            out.push(theta);
            out.push(log_likelihood(&self.model, theta, self.noise.eps, self.noise.psi, &self.obs)?);
        }
        Ok(out)
    }

    pub fn mle(&self) -> smallnoise::Result<f64> {
        let cfg = SearchConfig { grid_size: 60, ..SearchConfig::default() };
        Ok(mle(&self.model, self.noise.eps, self.noise.psi, &self.obs, &cfg)?.estimate)
    }
}

#[wasm_bindgen]
impl Session {
    /// `family` is one of CONST, LINEAR_F, EXP_A, RECIPROCAL, SQRT_B.
    #[wasm_bindgen(constructor)]
    pub fn new(family: &str, y0: f64, theta: f64, eps: f64, delta: f64, n_steps: usize, seed: u32) -> Result<Session, JsError> {
        Session::build(family, y0, theta, eps, delta, n_steps, seed).map_err(js_err)
    }

    pub fn t(&self) -> Vec<f64> {
        self.obs.grid.nodes()
    }

    pub fn x(&self) -> Vec<f64> {
        self.obs.x.clone()
    }

    pub fn y(&self) -> Vec<f64> {
        self.obs.y.clone().unwrap_or_default()
    }

    pub fn m(&self) -> Vec<f64> {
        self.m.clone()
    }

    pub fn gamma_star(&self) -> Vec<f64> {
        self.gamma.clone()
    }

    pub fn psi(&self) -> f64 {
        self.noise.psi
    }

    pub fn theta_min(&self) -> f64 {
        self.model.domain().lo
    }

    pub fn theta_max(&self) -> f64 {
        self.model.domain().hi
    }

    /// Interleaved `[θ_0, logL_0, θ_1, logL_1, ...]` on an even lattice.
    pub fn likelihood_profile(&self, n_points: usize) -> Result<Vec<f64>, JsError> {
        self.profile(n_points).map_err(js_err)
    }

    pub fn estimate_mle(&self) -> Result<f64, JsError> {
        self.mle().map_err(js_err)
    }
}

/// Rows `[ε, ε/ψ, sup_{t ≥ t0}|γ* − γ₀|]` for ε = 10^-2 … 10^-5.
pub fn riccati_table(family: &str, theta: f64, delta: f64, t0: f64) -> smallnoise::Result<Vec<f64>> {
    let model = model_for(family, 0.0)?;
    let mut out = Vec::new();
    for k in 2..=5 {
        let eps = 10f64.powi(-k);
        let noise = NoiseConfig::new(eps, delta)?;
        let ratio = noise.ratio();
        let n = ((20.0 / ratio).ceil() as usize).clamp(1000, MAX_STEPS);
        let grid = TimeGrid::new(n, HORIZON)?;
        let gamma = solve_riccati(&model, theta, eps, noise.psi, &grid)?;
        let sup = (0..grid.len())
            .filter(|&i| grid.t(i) >= t0)
            .map(|i| (gamma[i] - gamma_limit(&model, theta, grid.t(i))).abs())
            .fold(0.0, f64::max);
        out.extend([eps, ratio, sup]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn riccati_convergence(family: &str, theta: f64, delta: f64, t0: f64) -> Result<Vec<f64>, JsError> {
    riccati_table(family, theta, delta, t0).map_err(js_err)
}
