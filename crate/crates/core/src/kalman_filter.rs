//! Kalman-Bucy filter for a candidate θ: the normalized Riccati equation
//!
//! ```text
//! dγ*/dt = 2 a γ* − (ψ/ε) γ*² f²/σ² + (ψ/ε) b²,   γ*(0) = 0
//! ```
//!
//! (γ* = γ/(εψ)), the conditional mean `m`, their θ-derivatives, and the
//! adaptive filter driven by a running estimate.
//!
//! Two discretizations are offered. [`RiccatiScheme::ContinuousFlow`]
//! freezes the coefficients on each step and applies the exact flow of the
//! scalar Riccati equation; the mean is advanced semi-implicitly. It
//! converges to the continuous-time filter and is what the limit checks use.
//! [`RiccatiScheme::SampledData`] is the exact discrete Kalman filter of the
//! Euler-discretized model. When `(ψ/ε) h` is not small the continuous
//! filter is a poor predictor of Euler increments, and the likelihood built
//! on it is biased; the sampled-data recursion is the right one to pair with
//! discretely observed data and is the default for estimation.
//!
//! θ-derivatives are obtained by pushing dual numbers through exactly the
//! same step functions, so `m_dot` and `gamma_star_dot` are the exact
//! derivatives of the computed `m` and `gamma_star`.

use std::cell::Cell;
use std::io::Write;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::coefficients::{CoeffSample, CoefficientModel};
use crate::error::{Error, Result};
use crate::sde_sim::{fmt_real, SamplePath, TimeGrid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RiccatiScheme {
    /// Exact frozen-coefficient Riccati flow, semi-implicit mean update.
    #[default]
    ContinuousFlow,
    /// Discrete Kalman filter of the Euler-discretized system.
    SampledData,
}

impl std::str::FromStr for RiccatiScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "continuous" | "continuous_flow" => Ok(RiccatiScheme::ContinuousFlow),
            "sampled" | "sampled_data" => Ok(RiccatiScheme::SampledData),
            _ => Err(Error::Config(format!("unknown Riccati scheme '{s}'"))),
        }
    }
}

thread_local! {
    static RICCATI_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of Riccati solves performed on the current thread.
pub fn riccati_call_count() -> u64 {
    RICCATI_CALLS.with(Cell::get)
}

pub fn reset_riccati_call_count() {
    RICCATI_CALLS.with(|c| c.set(0));
}

// Minimal forward-mode dual numbers for the derivative pass.

trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn expm1(self) -> Self;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn val(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn expm1(self) -> Self {
        f64::exp_m1(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Real for Dual {
    fn cst(v: f64) -> Self {
        Dual::new(v, 0.0)
    }
    fn val(self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, if s > 0.0 { 0.5 * self.d / s } else { 0.0 })
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, e * self.d)
    }
    fn expm1(self) -> Self {
        Dual::new(self.v.exp_m1(), self.v.exp() * self.d)
    }
}

/// `expm1(x)/x`, continuous at zero.
fn phi1<T: Real>(x: T) -> T {
    if x.val().abs() < 1e-8 {
        T::cst(1.0) + x * T::cst(0.5)
    } else {
        x.expm1() / x
    }
}

/// Exact flow over time `h` of `γ' = −2 a_c γ − k γ² + c` (k > 0, c ≥ 0).
fn riccati_flow<T: Real>(a_c: T, k: T, c: T, g: T, h: f64) -> T {
    let two = T::cst(2.0);
    if c.val() == 0.0 {
        if g.val() == 0.0 {
            return g;
        }
        // 1/γ solves a linear equation.
        let x = two * a_c * T::cst(h);
        return g / (x.exp() + g * k * T::cst(h) * phi1(x));
    }
    let r = (a_c * a_c + k * c).sqrt();
    let gbar = if a_c.val() >= 0.0 { c / (a_c + r) } else { (r - a_c) / k };
    let d = g - gbar;
    let em = (-two * r * T::cst(h)).expm1();
    gbar + d * (em + T::cst(1.0)) / (T::cst(1.0) - k * d / (two * r) * em)
}

/// Coefficients of one frozen step, lifted to `T`.
#[derive(Clone, Copy)]
struct StepCoeffs<T> {
    a: T,
    f: T,
    b: T,
    sigma: T,
}

impl StepCoeffs<f64> {
    fn plain(c: &CoeffSample) -> Self {
        StepCoeffs {
            a: c.a,
            f: c.f,
            b: c.b,
            sigma: c.sigma,
        }
    }
}

impl StepCoeffs<Dual> {
    fn lifted(c: &CoeffSample) -> Self {
        StepCoeffs {
            a: Dual::new(c.a, c.a_dot),
            f: Dual::new(c.f, c.f_dot),
            b: Dual::new(c.b, c.b_dot),
            sigma: Dual::cst(c.sigma),
        }
    }
}

fn riccati_step<T: Real>(scheme: RiccatiScheme, c: &StepCoeffs<T>, r: f64, g: T, h: f64) -> T {
    let r_t = T::cst(r);
    let k = r_t * c.f * c.f / (c.sigma * c.sigma);
    let src = r_t * c.b * c.b;
    match scheme {
        RiccatiScheme::ContinuousFlow => riccati_flow(-c.a, k, src, g, h),
        RiccatiScheme::SampledData => {
            let h_t = T::cst(h);
            let grow = T::cst(1.0) + c.a * h_t;
            grow * grow * g / (T::cst(1.0) + k * g * h_t) + src * h_t
        }
    }
}

fn mean_step<T: Real>(scheme: RiccatiScheme, c: &StepCoeffs<T>, r: f64, g: T, m: T, dx: f64, h: f64) -> T {
    let (r_t, h_t, one) = (T::cst(r), T::cst(h), T::cst(1.0));
    let gain = g * c.f / (c.sigma * c.sigma);
    let drive = m + r_t * gain * T::cst(dx);
    match scheme {
        RiccatiScheme::ContinuousFlow => {
            let q = -c.a + r_t * gain * c.f;
            drive / (one + q * h_t)
        }
        RiccatiScheme::SampledData => (one + c.a * h_t) * drive / (one + r_t * gain * c.f * h_t),
    }
}

/// Exact solution at time `h` of
/// `dγ/dt = −2 a_c γ − (ψ/ε) γ² f_c²/σ_c² + (ψ/ε) b_c²`, `γ(0) = γ_in`.
/// `a_c` is the decay rate, i.e. minus the drift coefficient `a`.
#[allow(clippy::too_many_arguments)]
pub fn riccati_const_step(a_c: f64, f_c: f64, b_c: f64, sigma_c: f64, eps: f64, psi: f64, gamma_in: f64, h: f64) -> f64 {
    let r = psi / eps;
    riccati_flow(a_c, r * f_c * f_c / (sigma_c * sigma_c), r * b_c * b_c, gamma_in, h)
}

/// Positive equilibrium of the constant-coefficient Riccati equation.
pub fn riccati_fixed_point(a_c: f64, f_c: f64, b_c: f64, sigma_c: f64, eps: f64, psi: f64) -> f64 {
    let r = psi / eps;
    let k = r * f_c * f_c / (sigma_c * sigma_c);
    let c = r * b_c * b_c;
    let root = (a_c * a_c + k * c).sqrt();
    if a_c >= 0.0 {
        c / (a_c + root)
    } else {
        (root - a_c) / k
    }
}

/// Explicit solution of the comparison equation
/// `γ̂' = −2 a_m γ̂ − (ψ/ε) γ̂² f_m²/σ_M² + (ψ/ε) B²`, `γ̂(0) = 0`:
///
/// ```text
/// γ̂(t) = e^{−2Rt} [ ψ f_m² (1 − e^{−2Rt}) / (2 ε R σ_M²) − 1/γ̄ ]^{-1} + γ̄
/// ```
pub fn gamma_hat_bound(a_m: f64, f_m: f64, big_b: f64, sigma_big: f64, eps: f64, psi: f64, t: f64) -> f64 {
    let ratio = psi / eps;
    if big_b == 0.0 || t == 0.0 {
        return 0.0;
    }
    let r = (a_m * a_m + ratio * ratio * big_b * big_b * f_m * f_m / (sigma_big * sigma_big)).sqrt();
    let gbar = if a_m > 0.0 {
        let x = ratio * ratio * big_b * big_b * f_m * f_m / (a_m * a_m * sigma_big * sigma_big);
        // (√(1+x) − 1) written without cancellation.
        (a_m * sigma_big * sigma_big / (ratio * f_m * f_m)) * x / ((1.0 + x).sqrt() + 1.0)
    } else {
        (r - a_m) * sigma_big * sigma_big / (ratio * f_m * f_m)
    };
    let decay = (-2.0 * r * t).exp();
    let one_minus = -(-2.0 * r * t).exp_m1();
    decay / (ratio * f_m * f_m * one_minus / (2.0 * r * sigma_big * sigma_big) - 1.0 / gbar) + gbar
}

/// Constants `(a_m, f_m, B, σ_M)` of the comparison equation at a fixed θ:
/// the smallest decay rate `−a`, the smallest `f`, the largest `b` and the
/// largest `σ` over a dense time lattice.
pub fn comparison_constants(model: &CoefficientModel, theta: f64, samples: usize) -> (f64, f64, f64, f64) {
    let n = samples.max(2);
    let mut out = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..n {
        let t = model.horizon() * k as f64 / (n - 1) as f64;
        let c = model.sample(theta, t);
        out.0 = out.0.min(-c.a);
        out.1 = out.1.min(c.f);
        out.2 = out.2.max(c.b);
        out.3 = out.3.max(c.sigma);
    }
    out
}

fn check_theta(model: &CoefficientModel, theta: f64) -> Result<()> {
    if model.domain().contains_closed(theta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("θ = {theta} outside the parameter set")))
    }
}

fn check_noise(eps: f64, psi: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 && psi > 0.0 && psi <= 1.0 {
        Ok(())
    } else {
        Err(Error::Contract(format!("ε, ψ must lie in (0, 1], got {eps}, {psi}")))
    }
}

fn check_grid(model: &CoefficientModel, grid: &TimeGrid) -> Result<()> {
    if grid.horizon() <= model.horizon() * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "grid horizon {} exceeds model horizon {}",
            grid.horizon(),
            model.horizon()
        )))
    }
}

/// γ* on the grid with the default [`RiccatiScheme::ContinuousFlow`].
pub fn solve_riccati(model: &CoefficientModel, theta: f64, eps: f64, psi: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    solve_riccati_scheme(model, theta, eps, psi, grid, RiccatiScheme::ContinuousFlow)
}

pub fn solve_riccati_scheme(
    model: &CoefficientModel,
    theta: f64,
    eps: f64,
    psi: f64,
    grid: &TimeGrid,
    scheme: RiccatiScheme,
) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    check_noise(eps, psi)?;
    check_grid(model, grid)?;
    RICCATI_CALLS.with(|c| c.set(c.get() + 1));
    let r = psi / eps;
    let h = grid.h();
    let mut out = Vec::with_capacity(grid.len());
    let mut g = 0.0;
    out.push(g);
    for i in 0..grid.n_steps() {
        let c = StepCoeffs::plain(&model.sample(theta, grid.t(i)));
        g = riccati_step(scheme, &c, r, g, h);
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::Numerical {
                step: i + 1,
                what: format!("γ* = {g}"),
            });
        }
        out.push(g);
    }
    Ok(out)
}

fn check_lengths(grid: &TimeGrid, obs: &SamplePath, seqs: &[&[f64]]) -> Result<()> {
    if !obs.grid.same_as(grid) {
        return Err(Error::Contract("observation grid differs from the filter grid".into()));
    }
    for s in seqs {
        if s.len() != grid.len() {
            return Err(Error::Contract(format!(
                "sequence of length {} does not match grid of {} nodes",
                s.len(),
                grid.len()
            )));
        }
    }
    Ok(())
}

/// Conditional mean with the continuous-flow recursion
/// `m_{i+1} = [m_i + (ψ/ε) A_i ΔX_i] / [1 + q_i h]`, `A = γ* f/σ²`,
/// `q = −a + (ψ/ε) A f`; `m_0 = y0`.
pub fn run_filter(
    model: &CoefficientModel,
    theta: f64,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    gamma_star: &[f64],
) -> Result<Vec<f64>> {
    run_filter_scheme(model, theta, eps, psi, obs, gamma_star, RiccatiScheme::ContinuousFlow)
}

pub fn run_filter_scheme(
    model: &CoefficientModel,
    theta: f64,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    gamma_star: &[f64],
    scheme: RiccatiScheme,
) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    let grid = obs.grid;
    check_lengths(&grid, obs, &[gamma_star])?;
    let r = psi / eps;
    let h = grid.h();
    let mut m = Vec::with_capacity(grid.len());
    m.push(model.y0());
    for i in 0..grid.n_steps() {
        let c = StepCoeffs::plain(&model.sample(theta, grid.t(i)));
        let next = mean_step(scheme, &c, r, gamma_star[i], m[i], obs.x[i + 1] - obs.x[i], h);
        if !next.is_finite() {
            return Err(Error::Numerical {
                step: i + 1,
                what: format!("m = {next}"),
            });
        }
        m.push(next);
    }
    Ok(m)
}

/// `(m_dot, gamma_star_dot)`, both zero at `t = 0`.
pub fn run_filter_derivatives(
    model: &CoefficientModel,
    theta: f64,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    gamma_star: &[f64],
    m: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    run_filter_derivatives_scheme(model, theta, eps, psi, obs, gamma_star, m, RiccatiScheme::ContinuousFlow)
}

#[allow(clippy::too_many_arguments)]
pub fn run_filter_derivatives_scheme(
    model: &CoefficientModel,
    theta: f64,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    gamma_star: &[f64],
    m: &[f64],
    scheme: RiccatiScheme,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_theta(model, theta)?;
    let grid = obs.grid;
    check_lengths(&grid, obs, &[gamma_star, m])?;
    let r = psi / eps;
    let h = grid.h();
    let n = grid.len();
    let mut m_dot = Vec::with_capacity(n);
    let mut g_dot = Vec::with_capacity(n);
    m_dot.push(0.0);
    g_dot.push(0.0);
    for i in 0..grid.n_steps() {
        let c = StepCoeffs::lifted(&model.sample(theta, grid.t(i)));
        let g = Dual::new(gamma_star[i], g_dot[i]);
        let mi = Dual::new(m[i], m_dot[i]);
        let g_next = riccati_step(scheme, &c, r, g, h);
        let m_next = mean_step(scheme, &c, r, g, mi, obs.x[i + 1] - obs.x[i], h);
        if !(g_next.d.is_finite() && m_next.d.is_finite()) {
            return Err(Error::Numerical {
                step: i + 1,
                what: "non-finite filter derivative".into(),
            });
        }
        g_dot.push(g_next.d);
        m_dot.push(m_next.d);
    }
    Ok((m_dot, g_dot))
}

/// Riccati, filter and `Σ w M (ΔX − ½ M h)` in one pass, `M = f m_i`,
/// `w = 1/(ε²σ²)`. Same arithmetic as the separate passes.
pub(crate) fn likelihood_pass(
    model: &CoefficientModel,
    theta: f64,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    scheme: RiccatiScheme,
) -> Result<f64> {
    check_theta(model, theta)?;
    check_noise(eps, psi)?;
    let grid = obs.grid;
    check_grid(model, &grid)?;
    RICCATI_CALLS.with(|c| c.set(c.get() + 1));
    let r = psi / eps;
    let h = grid.h();
    let (mut g, mut m, mut ll) = (0.0, model.y0(), 0.0);
    for i in 0..grid.n_steps() {
        let c = StepCoeffs::plain(&model.sample(theta, grid.t(i)));
        let dx = obs.x[i + 1] - obs.x[i];
        let big_m = c.f * m;
        ll += big_m * (dx - 0.5 * big_m * h) / (eps * eps * c.sigma * c.sigma);
        m = mean_step(scheme, &c, r, g, m, dx, h);
        g = riccati_step(scheme, &c, r, g, h);
        if !(g.is_finite() && g >= 0.0 && m.is_finite()) {
            return Err(Error::Numerical {
                step: i + 1,
                what: format!("γ* = {g}, m = {m}"),
            });
        }
    }
    Ok(ll)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterTrajectory {
    pub grid: TimeGrid,
    pub m: Vec<f64>,
    pub gamma_star: Vec<f64>,
    pub m_dot: Option<Vec<f64>>,
    pub gamma_star_dot: Option<Vec<f64>>,
    pub theta: f64,
    pub eps: f64,
    pub psi: f64,
}

impl FilterTrajectory {
    /// Riccati solve, mean filter and optionally the derivative filter in one go.
    pub fn compute(
        model: &CoefficientModel,
        theta: f64,
        eps: f64,
        psi: f64,
        obs: &SamplePath,
        scheme: RiccatiScheme,
        derivatives: bool,
    ) -> Result<Self> {
        let gamma_star = solve_riccati_scheme(model, theta, eps, psi, &obs.grid, scheme)?;
        let m = run_filter_scheme(model, theta, eps, psi, obs, &gamma_star, scheme)?;
        let (m_dot, gamma_star_dot) = if derivatives {
            let (md, gd) = run_filter_derivatives_scheme(model, theta, eps, psi, obs, &gamma_star, &m, scheme)?;
            (Some(md), Some(gd))
        } else {
            (None, None)
        };
        Ok(FilterTrajectory {
            grid: obs.grid,
            m,
            gamma_star,
            m_dot,
            gamma_star_dot,
            theta,
            eps,
            psi,
        })
    }

    /// CSV with header `t,m,gamma_star[,m_dot,gamma_star_dot]`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let wrap = |e: csv::Error| Error::csv("<filter>", e);
        let derivs = self.m_dot.as_ref().zip(self.gamma_star_dot.as_ref());
        if derivs.is_some() {
            w.write_record(["t", "m", "gamma_star", "m_dot", "gamma_star_dot"]).map_err(wrap)?;
        } else {
            w.write_record(["t", "m", "gamma_star"]).map_err(wrap)?;
        }
        for i in 0..self.grid.len() {
            let mut row = vec![fmt_real(self.grid.t(i)), fmt_real(self.m[i]), fmt_real(self.gamma_star[i])];
            if let Some((md, gd)) = derivs {
                row.push(fmt_real(md[i]));
                row.push(fmt_real(gd[i]));
            }
            w.write_record(&row).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("<filter>", e))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveFilterOutput {
    /// `m̂` on the grid; NaN before the start index.
    pub m_hat: Vec<f64>,
    /// Set when some θ value had to be clamped into the parameter set.
    pub clamped: bool,
}

/// Adaptive filter with the limit gain,
/// `dm̂ = a(θ⋆,t) m̂ dt + (ψ/ε)(b(θ⋆,t)/σ(t)) [dX − f(θ⋆,t) m̂ dt]`,
/// started at node `start` with `m̂ = m_start`. `theta_process[i]` is the
/// running estimate used on step `i → i+1`.
pub fn adaptive_filter(
    model: &CoefficientModel,
    theta_process: &[f64],
    start: usize,
    m_start: f64,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
) -> Result<AdaptiveFilterOutput> {
    let grid = obs.grid;
    check_lengths(&grid, obs, &[theta_process])?;
    check_noise(eps, psi)?;
    if start > grid.n_steps() {
        return Err(Error::Contract(format!("start index {start} beyond the grid")));
    }
    let r = psi / eps;
    let h = grid.h();
    let domain = model.domain();
    let mut clamped = false;
    let mut m_hat = vec![f64::NAN; grid.len()];
    m_hat[start] = m_start;
    for i in start..grid.n_steps() {
        let raw = theta_process[i];
        if !raw.is_finite() {
            return Err(Error::Numerical {
                step: i,
                what: "non-finite θ in the adaptive filter".into(),
            });
        }
        let theta = domain.clamp(raw);
        clamped |= theta != raw;
        let c = model.sample(theta, grid.t(i));
        let gain = r * c.b / c.sigma;
        let q = -c.a + gain * c.f;
        m_hat[i + 1] = (m_hat[i] + gain * (obs.x[i + 1] - obs.x[i])) / (1.0 + q * h);
    }
    Ok(AdaptiveFilterOutput { m_hat, clamped })
}
