//! Euler-Maruyama simulation of the observed/hidden pair and the zero-noise
//! limit ODE.
//!
//! Both equations have additive noise, so the Euler scheme already has strong
//! order one. Gaussian draws come from ChaCha8 keyed by the path seed with
//! one stream per noise channel, so the state and observation noises are
//! independent and every path is reproducible regardless of which worker
//! generates it.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};

const STATE_CHANNEL: u64 = 0;
const OBS_CHANNEL: u64 = 1;

/// Uniform grid `t_i = i h`, `i = 0..=n_steps`, `h = T / n_steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    n_steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::Contract(format!("n_steps must be ≥ 2, got {n_steps}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Contract(format!("horizon must be positive, got {horizon}")));
        }
        Ok(TimeGrid { n_steps, horizon })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.t(i)).collect()
    }

    /// Index of the node nearest to `t` (ties toward the later node).
    pub fn nearest_index(&self, t: f64) -> usize {
        let k = (t / self.h()).round();
        (k.max(0.0) as usize).min(self.n_steps)
    }

    /// The first `k` steps of this grid.
    pub fn prefix(&self, k: usize) -> Result<TimeGrid> {
        if k > self.n_steps {
            return Err(Error::Contract(format!("prefix of {k} steps exceeds {}", self.n_steps)));
        }
        TimeGrid::new(k, self.t(k))
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps && (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon
    }
}

/// Noise intensities: observation noise `ε`, state noise `ψ = ε^δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    pub eps: f64,
    pub delta: f64,
    pub psi: f64,
    /// When set, `simulate` zeroes both noise amplitudes while the filter
    /// and estimators still see `eps` and `psi`.
    pub silent: bool,
}

impl NoiseConfig {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Contract(format!("ε must lie in (0, 1], got {eps}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Contract(format!("δ must lie in (0, 1), got {delta}")));
        }
        Ok(NoiseConfig {
            eps,
            delta,
            psi: eps.powf(delta),
            silent: false,
        })
    }

    pub fn silenced(mut self) -> Self {
        self.silent = true;
        self
    }

    /// The regime in which the consistency and normality results apply.
    pub fn regime_ok(&self) -> bool {
        self.delta < 1.0 / 3.0
    }

    /// `ε/ψ`, the Riccati boundary-layer width and the squared error scale.
    pub fn ratio(&self) -> f64 {
        self.eps / self.psi
    }

    /// `√(ψ/ε)`, the normalization of estimation errors.
    pub fn rate(&self) -> f64 {
        (self.psi / self.eps).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    pub grid: TimeGrid,
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub seed: u64,
    pub theta_true: Option<f64>,
}

impl SamplePath {
    /// Observation-only path on `grid`.
    pub fn from_observations(grid: TimeGrid, x: Vec<f64>) -> Result<Self> {
        if x.len() != grid.len() {
            return Err(Error::Contract(format!(
                "path has {} nodes, grid has {}",
                x.len(),
                grid.len()
            )));
        }
        Ok(SamplePath {
            grid,
            x,
            y: None,
            seed: 0,
            theta_true: None,
        })
    }

    /// Restriction to the first `k` steps.
    pub fn truncate(&self, k: usize) -> Result<SamplePath> {
        let grid = self.grid.prefix(k)?;
        Ok(SamplePath {
            grid,
            x: self.x[..=k].to_vec(),
            y: self.y.as_ref().map(|y| y[..=k].to_vec()),
            seed: self.seed,
            theta_true: self.theta_true,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let wrap = |e: csv::Error| Error::csv("<path>", e);
        match &self.y {
            Some(_) => w.write_record(["t", "X", "Y"]).map_err(wrap)?,
            None => w.write_record(["t", "X"]).map_err(wrap)?,
        }
        for i in 0..self.grid.len() {
            let mut row = vec![fmt_real(self.grid.t(i)), fmt_real(self.x[i])];
            if let Some(y) = &self.y {
                row.push(fmt_real(y[i]));
            }
            w.write_record(&row).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("<path>", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file).map_err(|e| relabel(e, path))
    }

    /// Parses `t,X[,Y]`. The grid must be uniform and start at zero.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let wrap = |e: csv::Error| Error::csv("<path>", e);
        let headers = r.headers().map_err(wrap)?.clone();
        let cols: Vec<&str> = headers.iter().map(str::trim).collect();
        let has_y = match cols.as_slice() {
            ["t", "X"] => false,
            ["t", "X", "Y"] => true,
            _ => {
                return Err(Error::Config(format!(
                    "expected header t,X[,Y], got {}",
                    cols.join(",")
                )))
            }
        };
        let (mut ts, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec.map_err(wrap)?;
            let row = ts.len() + 1;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("bad number in row {row}")))
            };
            ts.push(parse(0)?);
            xs.push(parse(1)?);
            if has_y {
                ys.push(parse(2)?);
            }
        }
        if ts.len() < 3 {
            return Err(Error::InsufficientData { needed: 3, got: ts.len() });
        }
        let n = ts.len() - 1;
        let grid = TimeGrid::new(n, ts[n])?;
        for (i, &t) in ts.iter().enumerate() {
            if (t - grid.t(i)).abs() > 1e-9 * grid.horizon() {
                return Err(Error::Config(format!("non-uniform time grid at row {}", i + 1)));
            }
        }
        Ok(SamplePath {
            grid,
            x: xs,
            y: has_y.then_some(ys),
            seed: 0,
            theta_true: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file).map_err(|e| relabel(e, path))
    }
}

pub(crate) fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

/// Full double precision (17 significant digits).
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Simulates `(X, Y)` at `θ0` by Euler-Maruyama.
pub fn simulate(
    model: &CoefficientModel,
    theta0: f64,
    noise: &NoiseConfig,
    grid: &TimeGrid,
    seed: u64,
    keep_hidden: bool,
) -> Result<SamplePath> {
    let n = grid.n_steps();
    let sqrt_h = grid.h().sqrt();
    let draws = |channel: u64| -> Vec<f64> {
        if noise.silent {
            return vec![0.0; n];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(channel);
        (0..n).map(|_| sqrt_h * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let dv = draws(STATE_CHANNEL);
    let dw = draws(OBS_CHANNEL);
    let mut path = simulate_with_increments(model, theta0, noise, grid, &dw, &dv)?;
    path.seed = seed;
    if !keep_hidden {
        path.y = None;
    }
    Ok(path)
}

/// Euler-Maruyama driven by given Brownian increments `dw` (observation)
/// and `dv` (state), each of length `n_steps`.
pub fn simulate_with_increments(
    model: &CoefficientModel,
    theta0: f64,
    noise: &NoiseConfig,
    grid: &TimeGrid,
    dw: &[f64],
    dv: &[f64],
) -> Result<SamplePath> {
    let n = grid.n_steps();
    if dw.len() != n || dv.len() != n {
        return Err(Error::Contract("increment length must equal n_steps".into()));
    }
    if !model.domain().contains_closed(theta0) {
        return Err(Error::Domain(format!("θ0 = {theta0} outside the parameter set")));
    }
    if (grid.horizon() - model.horizon()).abs() > 1e-12 * model.horizon() {
        return Err(Error::Contract(format!(
            "grid horizon {} differs from model horizon {}",
            grid.horizon(),
            model.horizon()
        )));
    }
    let (obs_amp, state_amp) = if noise.silent { (0.0, 0.0) } else { (noise.eps, noise.psi) };
    let h = grid.h();
    let mut x = Vec::with_capacity(n + 1);
    let mut y = Vec::with_capacity(n + 1);
    x.push(0.0);
    y.push(model.y0());
    for i in 0..n {
        let c = model.sample(theta0, grid.t(i));
        let (xi, yi) = (x[i], y[i]);
        y.push(yi + c.a * yi * h + state_amp * c.b * dv[i]);
        x.push(xi + c.f * yi * h + obs_amp * c.sigma * dw[i]);
    }
    Ok(SamplePath {
        grid: *grid,
        x,
        y: Some(y),
        seed: 0,
        theta_true: Some(theta0),
    })
}

/// RK4 solution of `x' = f(θ,t) y`, `y' = a(θ,t) y`, `x(0) = 0`, `y(0) = y0`.
pub fn limit_ode(model: &CoefficientModel, theta: f64, grid: &TimeGrid, y0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !model.domain().contains_closed(theta) {
        return Err(Error::Domain(format!("θ = {theta} outside the parameter set")));
    }
    let n = grid.n_steps();
    let h = grid.h();
    let rhs = |t: f64, y: f64| {
        let c = model.sample(theta, t);
        (c.f * y, c.a * y)
    };
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let (mut x, mut y) = (0.0, y0);
    xs.push(x);
    ys.push(y);
    for i in 0..n {
        let t = grid.t(i);
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1.1);
        let k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2.1);
        let k4 = rhs(t + h, y + h * k3.1);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Per-replicate seed: the SplitMix64 finalizer applied to
/// `master + index · 0x9E3779B97F4A7C15` (wrapping). Both maps are
/// bijections of `u64`, so distinct indices always give distinct seeds.
pub fn derive_seed(master_seed: u64, replicate_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(replicate_index.wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
