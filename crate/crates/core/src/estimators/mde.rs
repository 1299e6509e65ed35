use crate::coefficients::{CoefficientModel, Family};
use crate::error::{Error, Result};
use crate::quadrature::trapezoid;
use crate::sde_sim::{limit_ode, SamplePath, TimeGrid};

use super::search::{maximize, SearchConfig};
use super::{EstimationFlags, EstimationResult, Method};

/// `H(θ,t) = y0 ∫_0^t exp(∫_0^s a(θ,v) dv) f(θ,s) ds` on the grid: the
/// observed component of the zero-noise limit, integrated by RK4.
pub fn h_function(model: &CoefficientModel, theta: f64, grid: &TimeGrid, y0: f64) -> Result<Vec<f64>> {
    if y0 == 0.0 {
        if !model.domain().contains_closed(theta) {
            return Err(Error::Domain(format!("θ = {theta} outside the parameter set")));
        }
        return Ok(vec![0.0; grid.len()]);
    }
    Ok(limit_ode(model, theta, grid, y0)?.0)
}

/// `∫_0^T (X_t − H(θ,t))² dt` by the trapezoid rule.
pub fn mde_objective(model: &CoefficientModel, theta: f64, obs: &SamplePath, y0: f64) -> Result<f64> {
    let h = h_function(model, theta, &obs.grid, y0)?;
    let sq: Vec<f64> = obs.x.iter().zip(&h).map(|(x, h)| (x - h) * (x - h)).collect();
    Ok(trapezoid(&sq, obs.grid.h()))
}

/// Minimum distance estimate. `normalized_error` is left unset because the
/// normalization `max(ε, ψ)` is not known here; see
/// [`EstimationResult::normalize`].
pub fn mde(model: &CoefficientModel, obs: &SamplePath, cfg: &SearchConfig, y0: f64) -> Result<EstimationResult> {
    if y0 == 0.0 {
        return Err(Error::Contract("the minimum distance estimator needs y0 ≠ 0".into()));
    }
    let out = maximize(model.domain(), cfg, |theta| Ok(-mde_objective(model, theta, obs, y0)?))?;
    Ok(EstimationResult {
        method: Method::Mde,
        estimate: out.arg,
        objective: -out.value,
        normalized_error: None,
        n_evals: out.n_evals,
        flags: EstimationFlags {
            boundary_hit: out.boundary_hit,
            clamped: false,
            flat: out.flat,
        },
    })
}

/// Grid index for the time `tau`: the nearest node, at least one step in.
pub fn snap_tau(grid: &TimeGrid, tau: f64) -> Result<usize> {
    if !(tau >= grid.h()) {
        return Err(Error::GridTooCoarse(format!(
            "τ = {tau:e} is below one grid step h = {:e}",
            grid.h()
        )));
    }
    Ok(grid.nearest_index(tau).max(1))
}

/// `θ̄ = X_τ / (y0 f(0) τ)` for `f(θ,t) = θ f(t)`, with `τ` snapped to the
/// grid and the value clamped into the parameter set.
pub fn preliminary_estimator_bar(obs: &SamplePath, model: &CoefficientModel, y0: f64, tau: f64) -> Result<EstimationResult> {
    if model.family() != Family::LinearF {
        return Err(Error::Contract(format!(
            "the preliminary estimator needs the LINEAR_F family, got {}",
            model.family()
        )));
    }
    let f0 = model.f_plain(0.0);
    if f0 == 0.0 || y0 == 0.0 {
        return Err(Error::Contract("the preliminary estimator needs f(0) ≠ 0 and y0 ≠ 0".into()));
    }
    let k = snap_tau(&obs.grid, tau)?;
    let tau_k = obs.grid.t(k);
    let raw = obs.x[k] / (y0 * f0 * tau_k);
    if !raw.is_finite() {
        return Err(Error::Estimation("non-finite preliminary estimate".into()));
    }
    let domain = model.domain();
    let estimate = domain.clamp(raw);
    Ok(EstimationResult {
        method: Method::Prelim,
        estimate,
        objective: tau_k,
        normalized_error: None,
        n_evals: 1,
        flags: EstimationFlags {
            boundary_hit: estimate == domain.lo || estimate == domain.hi,
            clamped: estimate != raw,
            flat: false,
        },
    })
}
