use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::kalman_filter::{likelihood_pass, RiccatiScheme};
use crate::sde_sim::SamplePath;

use super::search::{maximize, SearchConfig};
use super::{EstimationFlags, EstimationResult, Method};

/// Log-likelihood with the default estimation scheme
/// ([`RiccatiScheme::SampledData`]).
pub fn log_likelihood(model: &CoefficientModel, theta: f64, eps: f64, psi: f64, obs: &SamplePath) -> Result<f64> {
    log_likelihood_scheme(model, theta, eps, psi, obs, RiccatiScheme::SampledData)
}

/// `Σ M_i ΔX_i/(ε²σ_i²) − ½ Σ M_i² h/(ε²σ_i²)` with `M = f m`, where `m_i`
/// only uses increments before `t_i` (left-point rule).
pub fn log_likelihood_scheme(
    model: &CoefficientModel,
    theta: f64,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    scheme: RiccatiScheme,
) -> Result<f64> {
    likelihood_pass(model, theta, eps, psi, obs, scheme)
}

/// Maximum likelihood estimate.
pub fn mle(model: &CoefficientModel, eps: f64, psi: f64, obs: &SamplePath, cfg: &SearchConfig) -> Result<EstimationResult> {
    mle_scheme(model, eps, psi, obs, cfg, RiccatiScheme::SampledData)
}

pub fn mle_scheme(
    model: &CoefficientModel,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    cfg: &SearchConfig,
    scheme: RiccatiScheme,
) -> Result<EstimationResult> {
    let out = maximize(model.domain(), cfg, |theta| log_likelihood_scheme(model, theta, eps, psi, obs, scheme))?;
    Ok(EstimationResult {
        method: Method::Mle,
        estimate: out.arg,
        objective: out.value,
        normalized_error: None,
        n_evals: out.n_evals,
        flags: EstimationFlags {
            boundary_hit: out.boundary_hit,
            clamped: false,
            flat: out.flat,
        },
    }
    .normalize(obs.theta_true, (eps / psi).sqrt()))
}

/// `log L(θ0 + u √(ε/ψ)) − log L(θ0)`.
pub fn normalized_llr(model: &CoefficientModel, theta0: f64, u: f64, eps: f64, psi: f64, obs: &SamplePath) -> Result<f64> {
    let theta = theta0 + u * (eps / psi).sqrt();
    if !model.domain().contains_closed(theta) {
        return Err(Error::Domain(format!("shifted θ = {theta} outside the parameter set")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    Ok(log_likelihood(model, theta, eps, psi, obs)? - log_likelihood(model, theta0, eps, psi, obs)?)
}
