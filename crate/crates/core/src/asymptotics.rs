//! Closed-form asymptotic quantities: `S = f b`, the Fisher information
//! `I = ∫ Ṡ²/(2Sσ) dt`, the contrast `G`, the Riccati limits `γ₀`, `γ̇₀`,
//! identifiability checks and the predicted error variance.

use std::fmt::Write as _;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::estimators::h_function;
use crate::quadrature::{simpson, trapezoid};
use crate::sde_sim::TimeGrid;

pub const QUADRATURE_PANELS: usize = 2048;
pub const IDENTIFIABILITY_FLOOR: f64 = 1e-10;

pub fn s_function(model: &CoefficientModel, theta: f64, t: f64) -> f64 {
    let c = model.sample(theta, t);
    c.f * c.b
}

pub fn s_dot(model: &CoefficientModel, theta: f64, t: f64) -> f64 {
    let c = model.sample(theta, t);
    c.f_dot * c.b + c.f * c.b_dot
}

fn check_theta(model: &CoefficientModel, theta: f64) -> Result<()> {
    if model.domain().contains_closed(theta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("θ = {theta} outside the parameter set")))
    }
}

/// Quadrature over `[lo, hi]` of an integrand that needs `S > 0`.
fn integrate_positive_s<F>(model: &CoefficientModel, theta: f64, lo: f64, hi: f64, mut g: F) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut bad = None;
    let v = simpson(
        |t| {
            let s = s_function(model, theta, t);
            if !(s > 0.0) {
                bad.get_or_insert((t, s));
                return 0.0;
            }
            g(t)
        },
        lo,
        hi,
        QUADRATURE_PANELS,
    );
    match bad {
        Some((t, s)) => Err(Error::Domain(format!("S(θ={theta}, t={t}) = {s} is not positive"))),
        None => Ok(v),
    }
}

/// `I_τ^t(θ) = ∫_τ^t Ṡ²/(2Sσ) ds`; `fisher_information(m, θ, 0, T)` is `I(θ)`.
pub fn fisher_information(model: &CoefficientModel, theta: f64, tau: f64, t: f64) -> Result<f64> {
    check_theta(model, theta)?;
    if !(tau >= 0.0 && tau <= t && t <= model.horizon() * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "need 0 ≤ τ ≤ t ≤ T, got τ = {tau}, t = {t}, T = {}",
            model.horizon()
        )));
    }
    if tau == t {
        return Ok(0.0);
    }
    integrate_positive_s(model, theta, tau, t, |s| {
        let c = model.sample(theta, s);
        let sd = c.f_dot * c.b + c.f * c.b_dot;
        sd * sd / (2.0 * c.f * c.b * c.sigma)
    })
}

/// `I_{t_start}^{t_i}(θ)` at every node `i ≥ start` of `grid` (zero before),
/// with Simpson's rule on each cell.
pub fn fisher_profile(model: &CoefficientModel, theta: f64, grid: &TimeGrid, start: usize) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    let integrand = |s: f64| {
        let c = model.sample(theta, s);
        let sd = c.f_dot * c.b + c.f * c.b_dot;
        let sv = c.f * c.b;
        if sv > 0.0 {
            Ok(sd * sd / (2.0 * sv * c.sigma))
        } else {
            Err(Error::Domain(format!("S(θ={theta}, t={s}) = {sv} is not positive")))
        }
    };
    let h = grid.h();
    let mut out = vec![0.0; grid.len()];
    let mut acc = 0.0;
    let mut left = integrand(grid.t(start.min(grid.n_steps())))?;
    for i in start..grid.n_steps() {
        let mid = integrand(grid.t(i) + 0.5 * h)?;
        let right = integrand(grid.t(i + 1))?;
        acc += h / 6.0 * (left + 4.0 * mid + right);
        out[i + 1] = acc;
        left = right;
    }
    Ok(out)
}

/// `G(θ, θ0) = ∫_0^T (S(θ,t) − S(θ0,t))² / (4 S(θ,t) σ(t)) dt`.
pub fn contrast_g(model: &CoefficientModel, theta: f64, theta0: f64) -> Result<f64> {
    check_theta(model, theta)?;
    check_theta(model, theta0)?;
    if theta == theta0 {
        return Ok(0.0);
    }
    integrate_positive_s(model, theta, 0.0, model.horizon(), |t| {
        let s = s_function(model, theta, t);
        let s0 = s_function(model, theta0, t);
        let c = model.sample(theta, t);
        (s - s0) * (s - s0) / (4.0 * s * c.sigma)
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentifiabilityCheck {
    /// Smallest contrast outside the ν-ball; `+∞` when no grid point lies
    /// outside it.
    pub min_value: f64,
    pub identifiable: bool,
}

fn excluded_minimum<F>(model: &CoefficientModel, theta0: f64, nu: f64, grid_size: usize, mut contrast: F) -> Result<IdentifiabilityCheck>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(nu > 0.0) {
        return Err(Error::Contract(format!("ν must be positive, got {nu}")));
    }
    check_theta(model, theta0)?;
    let mut min_value = f64::INFINITY;
    for theta in model.domain().lattice(grid_size) {
        if (theta - theta0).abs() > nu {
            min_value = min_value.min(contrast(theta)?);
        }
    }
    Ok(IdentifiabilityCheck {
        min_value,
        identifiable: min_value > IDENTIFIABILITY_FLOOR,
    })
}

/// `inf_{|θ−θ0|>ν} G(θ, θ0)` over a θ-lattice.
pub fn check_identifiability_s(model: &CoefficientModel, theta0: f64, nu: f64, grid_size: usize) -> Result<IdentifiabilityCheck> {
    excluded_minimum(model, theta0, nu, grid_size, |theta| contrast_g(model, theta, theta0))
}

/// `inf_{|θ−θ0|>ν} ∫ (H(θ,t) − H(θ0,t))² dt` over a θ-lattice, with `H`
/// evaluated on `t_grid`.
pub fn check_identifiability_h(
    model: &CoefficientModel,
    theta0: f64,
    nu: f64,
    y0: f64,
    grid_size: usize,
    t_grid: &TimeGrid,
) -> Result<IdentifiabilityCheck> {
    let h0 = h_function(model, theta0, t_grid, y0)?;
    excluded_minimum(model, theta0, nu, grid_size, |theta| {
        let h = h_function(model, theta, t_grid, y0)?;
        let sq: Vec<f64> = h.iter().zip(&h0).map(|(a, b)| (a - b) * (a - b)).collect();
        Ok(trapezoid(&sq, t_grid.h()))
    })
}

/// `γ₀ = b σ / f`.
pub fn gamma_limit(model: &CoefficientModel, theta: f64, t: f64) -> f64 {
    let c = model.sample(theta, t);
    c.b * c.sigma / c.f
}

/// `γ̇₀ = (b σ / f) (ḃ/b − ḟ/f)`.
pub fn gamma_limit_dtheta(model: &CoefficientModel, theta: f64, t: f64) -> f64 {
    let c = model.sample(theta, t);
    c.sigma * (c.b_dot * c.f - c.b * c.f_dot) / (c.f * c.f)
}

/// Predicted mean squared error `ε^{1−δ} / I(θ0)` of the MLE.
pub fn theoretical_variance(model: &CoefficientModel, theta0: f64, eps: f64, delta: f64) -> Result<f64> {
    let fisher = fisher_information(model, theta0, 0.0, model.horizon())?;
    if !(fisher > IDENTIFIABILITY_FLOOR) {
        return Err(Error::Singular(format!("I(θ0 = {theta0}) = {fisher:e}")));
    }
    Ok(eps.powf(1.0 - delta) / fisher)
}

#[derive(Clone, Debug)]
pub struct AsymptoticReport {
    model: CoefficientModel,
    pub theta0: f64,
    pub eps: f64,
    pub delta: f64,
    pub nu: f64,
    pub fisher: f64,
    pub min_g_outside_nu: f64,
    pub min_h_contrast: f64,
    /// `None` when `I(θ0) = 0`.
    pub predicted_variance: Option<f64>,
    pub identifiable_s: bool,
    pub identifiable_h: bool,
}

impl AsymptoticReport {
    pub fn build(model: &CoefficientModel, theta0: f64, eps: f64, delta: f64, nu: f64, grid_size: usize) -> Result<Self> {
        let fisher = fisher_information(model, theta0, 0.0, model.horizon())?;
        let s_check = check_identifiability_s(model, theta0, nu, grid_size)?;
        let t_grid = TimeGrid::new(1000, model.horizon())?;
        let h_check = check_identifiability_h(model, theta0, nu, model.y0(), grid_size, &t_grid)?;
        let predicted_variance = (fisher > IDENTIFIABILITY_FLOOR).then(|| eps.powf(1.0 - delta) / fisher);
        Ok(AsymptoticReport {
            model: model.clone(),
            theta0,
            eps,
            delta,
            nu,
            fisher,
            min_g_outside_nu: s_check.min_value,
            min_h_contrast: h_check.min_value,
            predicted_variance,
            identifiable_s: s_check.identifiable,
            identifiable_h: h_check.identifiable,
        })
    }

    /// `I_τ^t(θ0)`.
    pub fn fisher_partial(&self, tau: f64, t: f64) -> Result<f64> {
        fisher_information(&self.model, self.theta0, tau, t)
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let fmt = |v: f64| format!("{v:.16e}");
        let _ = writeln!(out, "family={}", self.model.family());
        let _ = writeln!(out, "theta0={}", fmt(self.theta0));
        let _ = writeln!(out, "eps={}", fmt(self.eps));
        let _ = writeln!(out, "delta={}", fmt(self.delta));
        let _ = writeln!(out, "psi={}", fmt(self.eps.powf(self.delta)));
        let _ = writeln!(out, "nu={}", fmt(self.nu));
        let _ = writeln!(out, "fisher={}", fmt(self.fisher));
        let _ = writeln!(out, "min_G_outside_nu={}", fmt(self.min_g_outside_nu));
        let _ = writeln!(out, "min_H_contrast={}", fmt(self.min_h_contrast));
        let pv = self.predicted_variance.map(fmt).unwrap_or_else(|| "nan".into());
        let _ = writeln!(out, "predicted_variance={pv}");
        let _ = writeln!(out, "identifiable_S={}", self.identifiable_s);
        let _ = writeln!(out, "identifiable_H={}", self.identifiable_h);
        out
    }
}
