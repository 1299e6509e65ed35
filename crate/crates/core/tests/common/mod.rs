#![allow(dead_code)]

pub mod invariants;

use smallnoise::coefficients::CoefficientModel;
use smallnoise::sde_sim::SamplePath;

pub type Check = fn() -> Result<(), String>;

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Exact log-likelihood of the Euler-discretized model by the prediction
/// error decomposition of a scalar Kalman filter. Written independently of
/// the library filter.
pub fn ped_log_likelihood(model: &CoefficientModel, theta: f64, eps: f64, psi: f64, obs: &SamplePath) -> f64 {
    let h = obs.grid.h();
    let mut mu = model.y0();
    let mut p = 0.0;
    let mut ll = 0.0;
    for i in 0..obs.grid.n_steps() {
        let c = model.sample(theta, obs.grid.t(i));
        let phi = 1.0 + c.a * h;
        let obs_gain = c.f * h;
        let nu = obs.x[i + 1] - obs.x[i] - obs_gain * mu;
        let s = obs_gain * obs_gain * p + eps * eps * c.sigma * c.sigma * h;
        ll -= 0.5 * ((2.0 * std::f64::consts::PI * s).ln() + nu * nu / s);
        let k = phi * p * obs_gain / s;
        mu = phi * mu + k * nu;
        p = phi * phi * p - k * k * s + psi * psi * c.b * c.b * h;
    }
    ll
}

/// Spread of a set of positive constants: `max/min`.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}
