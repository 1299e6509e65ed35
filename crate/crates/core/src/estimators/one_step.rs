use std::io::Write;

use crate::asymptotics::{fisher_profile, IDENTIFIABILITY_FLOOR};
use crate::coefficients::{CoefficientKind, CoefficientModel};
use crate::error::{Error, Result};
use crate::kalman_filter::{solve_riccati, FilterTrajectory, RiccatiScheme};
use crate::sde_sim::{fmt_real, SamplePath};

use super::mde::snap_tau;
use super::EstimationResult;

/// θ⋆ on the grid nodes after the start time τ.
#[derive(Clone, Debug, PartialEq)]
pub struct OneStepProcess {
    pub t: Vec<f64>,
    pub theta_star: Vec<f64>,
    /// Grid index of τ.
    pub start: usize,
    pub prelim: f64,
    /// `I_τ^T` at the preliminary estimate.
    pub fisher_final: f64,
    /// Whether `δ = ln ψ / ln ε` lies in (1/5, 1/3).
    pub regime_ok: bool,
}

impl OneStepProcess {
    pub fn final_estimate(&self) -> f64 {
        *self.theta_star.last().expect("non-empty process")
    }

    /// CSV with header `t,theta_star`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let wrap = |e: csv::Error| Error::csv("<one-step>", e);
        w.write_record(["t", "theta_star"]).map_err(wrap)?;
        for (t, th) in self.t.iter().zip(&self.theta_star) {
            w.write_record([fmt_real(*t), fmt_real(*th)]).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("<one-step>", e))
    }
}

/// One Newton-type correction of the preliminary estimate θ*, run as a
/// process in t:
///
/// ```text
/// θ⋆_t = θ* + I_τ^t(θ*)⁻¹ Σ_{τ ≤ t_i < t} Ṁ(θ*,t_i)/(εψσ²) (ΔX_i − M(θ*,t_i) h)
/// ```
///
/// with `M = f m`, `Ṁ = ḟ m + f ṁ`. The filter and its derivative are run
/// once, at θ*.
pub fn one_step_mle_process(
    model: &CoefficientModel,
    obs: &SamplePath,
    prelim: &EstimationResult,
    tau: f64,
    eps: f64,
    psi: f64,
) -> Result<OneStepProcess> {
    one_step_mle_process_scheme(model, obs, prelim, tau, eps, psi, RiccatiScheme::SampledData)
}

pub fn one_step_mle_process_scheme(
    model: &CoefficientModel,
    obs: &SamplePath,
    prelim: &EstimationResult,
    tau: f64,
    eps: f64,
    psi: f64,
    scheme: RiccatiScheme,
) -> Result<OneStepProcess> {
    let grid = obs.grid;
    let start = snap_tau(&grid, tau)?;
    if start >= grid.n_steps() {
        return Err(Error::Contract(format!("τ = {tau} leaves no observations after it")));
    }
    let theta = prelim.estimate;
    let fisher = fisher_profile(model, theta, &grid, start)?;
    let traj = FilterTrajectory::compute(model, theta, eps, psi, obs, scheme, true)?;
    let m_dot = traj.m_dot.as_ref().expect("derivatives requested");
    let h = grid.h();

    let mut t = Vec::with_capacity(grid.n_steps() - start);
    let mut theta_star = Vec::with_capacity(grid.n_steps() - start);
    let mut score = 0.0;
    for i in start..grid.n_steps() {
        let c = model.sample(theta, grid.t(i));
        let big_m = c.f * traj.m[i];
        let big_m_dot = c.f_dot * traj.m[i] + c.f * m_dot[i];
        score += big_m_dot / (eps * psi * c.sigma * c.sigma) * ((obs.x[i + 1] - obs.x[i]) - big_m * h);
        let info = fisher[i + 1];
        if !(info > IDENTIFIABILITY_FLOOR) {
            return Err(Error::Singular(format!("I_τ^t({theta}) = {info:e} at t = {}", grid.t(i + 1))));
        }
        t.push(grid.t(i + 1));
        theta_star.push(theta + score / info);
    }
    let delta = psi.ln() / eps.ln();
    Ok(OneStepProcess {
        t,
        theta_star,
        start,
        prelim: theta,
        fisher_final: fisher[grid.n_steps()],
        regime_ok: delta > 0.2 && delta < 1.0 / 3.0,
    })
}

/// The continuous-time conditional mean (for `y0 = 0`) without a
/// stochastic integral: with `A = γ* f/σ²`, `q = −a + (ψ/ε) A f`,
///
/// ```text
/// m(t) = (ψ/ε) [A(t) X_t − J(t)],   J' = −q J + (q A + A') X,   J(0) = 0,
/// ```
///
/// where `A'` uses the analytic t-derivatives of the coefficients and of
/// γ*. `J` is advanced with an exponential trapezoid rule.
pub fn m_by_parts(model: &CoefficientModel, theta: f64, eps: f64, psi: f64, obs: &SamplePath) -> Result<Vec<f64>> {
    let grid = obs.grid;
    let gamma = solve_riccati(model, theta, eps, psi, &grid)?;
    let r = psi / eps;
    let h = grid.h();
    let n = grid.len();
    let mut a_gain = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let t = grid.t(i);
        let c = model.sample(theta, t);
        let f_t = model.dt_raw(CoefficientKind::F, theta, t);
        let sigma_t = model.dt_raw(CoefficientKind::Sigma, theta, t);
        let s2 = c.sigma * c.sigma;
        let gm = gamma[i];
        let gm_t = 2.0 * c.a * gm - r * gm * gm * c.f * c.f / s2 + r * c.b * c.b;
        let a = gm * c.f / s2;
        let a_t = (gm_t * c.f + gm * f_t) / s2 - 2.0 * gm * c.f * sigma_t / (s2 * c.sigma);
        let qi = -c.a + r * a * c.f;
        a_gain.push(a);
        q.push(qi);
        g.push((qi * a + a_t) * obs.x[i]);
    }
    let mut m = Vec::with_capacity(n);
    let mut j = 0.0;
    m.push(r * (a_gain[0] * obs.x[0] - j));
    for i in 0..grid.n_steps() {
        let decay = (-0.5 * (q[i] + q[i + 1]) * h).exp();
        j = decay * j + 0.5 * h * (decay * g[i] + g[i + 1]);
        m.push(r * (a_gain[i + 1] * obs.x[i + 1] - j));
    }
    Ok(m)
}
