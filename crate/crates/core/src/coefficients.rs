//! Coefficient functions of the observed/hidden pair
//!
//! ```text
//! dX = f(θ,t) Y dt + ε σ(t) dW,    X(0) = 0
//! dY = a(θ,t) Y dt + ψ b(θ,t) dV,  Y(0) = y0
//! ```
//!
//! Only a closed set of parametric families is supported. Every family has
//! analytic first and second θ-derivatives and analytic t-derivatives, so the
//! filter derivatives and the by-parts representation never fall back to
//! numerical differentiation. The θ-free parts are polynomials in `t`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial `c0 + c1 t + c2 t^2 + ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(Vec<f64>);

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Model("empty polynomial".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Model("non-finite polynomial coefficient".into()));
        }
        Ok(Poly(coeffs))
    }

    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    #[inline]
    pub fn eval_dt(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.0.iter().enumerate().skip(1).rev() {
            acc = acc * t + k as f64 * c;
        }
        acc
    }

    fn is_constant(&self) -> bool {
        self.0.iter().skip(1).all(|&c| c == 0.0)
    }
}

/// Built-in parametric families. The θ-dependence of each:
///
/// | family       | f          | a          | b          |
/// |--------------|------------|------------|------------|
/// | `CONST`      | c_f        | c_a        | θ          |
/// | `LINEAR_F`   | θ φ(t)     | c_a        | c_b        |
/// | `EXP_A`      | c_f        | −θ         | c_b        |
/// | `RECIPROCAL` | θ φ(t)     | c_a + k_a θ| β(t)/θ     |
/// | `SQRT_B`     | c_f        | c_a        | √θ β(t)    |
///
/// `σ(t) = c_sigma` in all families. Every scalar may be given as a
/// polynomial in `t` instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Const,
    LinearF,
    ExpA,
    Reciprocal,
    SqrtB,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Const,
        Family::LinearF,
        Family::ExpA,
        Family::Reciprocal,
        Family::SqrtB,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Family::Const => "CONST",
            Family::LinearF => "LINEAR_F",
            Family::ExpA => "EXP_A",
            Family::Reciprocal => "RECIPROCAL",
            Family::SqrtB => "SQRT_B",
        }
    }

    /// Accepted parameter keys with their defaults.
    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Family::Const => &[("c_f", 1.0), ("c_a", -1.0), ("c_sigma", 1.0)],
            Family::LinearF => &[("phi", 1.0), ("c_a", -1.0), ("c_b", 1.0), ("c_sigma", 1.0)],
            Family::ExpA => &[("c_f", 1.0), ("c_b", 1.0), ("c_sigma", 1.0)],
            Family::Reciprocal => &[
                ("phi", 1.0),
                ("beta", 1.0),
                ("c_a", -1.0),
                ("k_a", 0.0),
                ("c_sigma", 1.0),
            ],
            Family::SqrtB => &[("beta", 1.0), ("c_f", 1.0), ("c_a", -1.0), ("c_sigma", 1.0)],
        }
    }

    /// Families whose evaluators have a pole or branch point at θ = 0.
    fn needs_positive_theta(self) -> bool {
        matches!(self, Family::Reciprocal | Family::SqrtB)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.id() == norm)
            .ok_or_else(|| Error::Model(format!("unknown family '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientKind {
    F,
    A,
    B,
    /// σ(t); ignores θ.
    Sigma,
}

/// Open parameter interval (α, β). Evaluators accept the closure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaDomain {
    pub lo: f64,
    pub hi: f64,
}

impl ThetaDomain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Model(format!("invalid θ-domain ({lo}, {hi})")));
        }
        Ok(ThetaDomain { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains_closed(&self, theta: f64) -> bool {
        theta >= self.lo && theta <= self.hi
    }

    pub fn clamp(&self, theta: f64) -> f64 {
        theta.clamp(self.lo, self.hi)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `n` equally spaced points including both endpoints.
    pub fn lattice(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .map(|k| self.lo + self.width() * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Named family parameters; every value is a polynomial in `t`
/// (a single entry for a constant).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, Vec<f64>>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), vec![value]);
        self
    }

    pub fn set_poly(mut self, key: &str, coeffs: &[f64]) -> Self {
        self.0.insert(key.to_string(), coeffs.to_vec());
        self
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.0.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// All coefficient values needed by one filter step at a fixed (θ, t).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CoeffSample {
    pub f: f64,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub f_dot: f64,
    pub a_dot: f64,
    pub b_dot: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientModel {
    family: Family,
    params: Params,
    f_t: Poly,
    a_t: Poly,
    b_t: Poly,
    sigma_t: Poly,
    k_a: f64,
    domain: ThetaDomain,
    horizon: f64,
    y0: f64,
}

/// Construct one of the built-in families. Missing parameters take the
/// family defaults; unknown keys are rejected.
pub fn builtin_model(
    family: Family,
    params: &Params,
    theta_domain: (f64, f64),
    horizon: f64,
    y0: f64,
) -> Result<CoefficientModel> {
    let domain = ThetaDomain::new(theta_domain.0, theta_domain.1)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Model(format!("horizon must be positive, got {horizon}")));
    }
    if !y0.is_finite() {
        return Err(Error::Model("y0 must be finite".into()));
    }
    if family.needs_positive_theta() && domain.lo <= 0.0 {
        return Err(Error::Model(format!(
            "{family} needs a θ-domain inside (0, ∞), got ({}, {})",
            domain.lo, domain.hi
        )));
    }

    let defaults = family.defaults();
    for (key, _) in params.iter() {
        if !defaults.iter().any(|(k, _)| *k == key) {
            return Err(Error::Model(format!("unknown parameter '{key}' for {family}")));
        }
    }
    let mut full = Params::new();
    for &(key, default) in defaults {
        let coeffs = params.get(key).map(<[f64]>::to_vec).unwrap_or_else(|| vec![default]);
        Poly::new(coeffs.clone()).map_err(|e| Error::Model(format!("parameter '{key}': {e}")))?;
        full = full.set_poly(key, &coeffs);
    }
    let full = full;
    let poly = |key: &str| Poly(full.get(key).expect("defaulted").to_vec());
    let one = Poly::constant(1.0);

    let (f_t, a_t, b_t) = match family {
        Family::Const => (poly("c_f"), poly("c_a"), one),
        Family::LinearF => (poly("phi"), poly("c_a"), poly("c_b")),
        Family::ExpA => (poly("c_f"), Poly::constant(0.0), poly("c_b")),
        Family::Reciprocal => (poly("phi"), poly("c_a"), poly("beta")),
        Family::SqrtB => (poly("c_f"), poly("c_a"), poly("beta")),
    };
    let k_a = match family {
        Family::Reciprocal => {
            let k = poly("k_a");
            if !k.is_constant() {
                return Err(Error::Model("k_a must be a constant".into()));
            }
            k.0[0]
        }
        _ => 0.0,
    };

    Ok(CoefficientModel {
        family,
        params: full.clone(),
        f_t,
        a_t,
        b_t,
        sigma_t: poly("c_sigma"),
        k_a,
        domain,
        horizon,
        y0,
    })
}

impl CoefficientModel {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn domain(&self) -> ThetaDomain {
        self.domain
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Same coefficients with a different initial hidden state.
    pub fn with_y0(&self, y0: f64) -> Self {
        CoefficientModel { y0, ..self.clone() }
    }

    /// Same coefficients on a shorter (or longer) horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Model(format!("horizon must be positive, got {horizon}")));
        }
        Ok(CoefficientModel {
            horizon,
            ..self.clone()
        })
    }

    fn check(&self, theta: f64, t: f64) -> Result<()> {
        if !self.domain.contains_closed(theta) {
            return Err(Error::Domain(format!(
                "θ = {theta} outside [{}, {}]",
                self.domain.lo, self.domain.hi
            )));
        }
        let slack = 1e-12 * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    pub fn eval(&self, kind: CoefficientKind, theta: f64, t: f64) -> Result<f64> {
        self.check(theta, t)?;
        let s = self.sample(theta, t);
        Ok(match kind {
            CoefficientKind::F => s.f,
            CoefficientKind::A => s.a,
            CoefficientKind::B => s.b,
            CoefficientKind::Sigma => s.sigma,
        })
    }

    /// Analytic θ-derivative of order 1 or 2.
    pub fn eval_dtheta(&self, kind: CoefficientKind, theta: f64, t: f64, order: u8) -> Result<f64> {
        if kind == CoefficientKind::Sigma {
            return Err(Error::Contract("σ does not depend on θ".into()));
        }
        if !(order == 1 || order == 2) {
            return Err(Error::Contract(format!("derivative order must be 1 or 2, got {order}")));
        }
        self.check(theta, t)?;
        let (f1, a1, b1) = self.dtheta_raw(theta, t, order);
        Ok(match kind {
            CoefficientKind::F => f1,
            CoefficientKind::A => a1,
            CoefficientKind::B => b1,
            CoefficientKind::Sigma => unreachable!(),
        })
    }

    /// Analytic t-derivative.
    pub fn eval_dt(&self, kind: CoefficientKind, theta: f64, t: f64) -> Result<f64> {
        self.check(theta, t)?;
        Ok(self.dt_raw(kind, theta, t))
    }

    pub(crate) fn dt_raw(&self, kind: CoefficientKind, theta: f64, t: f64) -> f64 {
        let (f_scale, b_scale) = self.theta_scales(theta);
        match kind {
            CoefficientKind::F => f_scale * self.f_t.eval_dt(t),
            CoefficientKind::A => self.a_t.eval_dt(t),
            CoefficientKind::B => b_scale * self.b_t.eval_dt(t),
            CoefficientKind::Sigma => self.sigma_t.eval_dt(t),
        }
    }

    /// Multipliers of the θ-free polynomials in f and b.
    #[inline]
    fn theta_scales(&self, theta: f64) -> (f64, f64) {
        match self.family {
            Family::Const => (1.0, theta),
            Family::LinearF => (theta, 1.0),
            Family::ExpA => (1.0, 1.0),
            Family::Reciprocal => (theta, 1.0 / theta),
            Family::SqrtB => (1.0, theta.sqrt()),
        }
    }

    #[inline]
    fn a_value(&self, theta: f64, t: f64) -> f64 {
        match self.family {
            Family::ExpA => -theta,
            Family::Reciprocal => self.a_t.eval(t) + self.k_a * theta,
            _ => self.a_t.eval(t),
        }
    }

    fn dtheta_raw(&self, theta: f64, t: f64, order: u8) -> (f64, f64, f64) {
        let ft = self.f_t.eval(t);
        let bt = self.b_t.eval(t);
        match (self.family, order) {
            (Family::Const, 1) => (0.0, 0.0, bt),
            (Family::Const, _) => (0.0, 0.0, 0.0),
            (Family::LinearF, 1) => (ft, 0.0, 0.0),
            (Family::LinearF, _) => (0.0, 0.0, 0.0),
            (Family::ExpA, 1) => (0.0, -1.0, 0.0),
            (Family::ExpA, _) => (0.0, 0.0, 0.0),
            (Family::Reciprocal, 1) => (ft, self.k_a, -bt / (theta * theta)),
            (Family::Reciprocal, _) => (0.0, 0.0, 2.0 * bt / (theta * theta * theta)),
            (Family::SqrtB, 1) => (0.0, 0.0, 0.5 * bt / theta.sqrt()),
            (Family::SqrtB, _) => (0.0, 0.0, -0.25 * bt / (theta * theta.sqrt())),
        }
    }

    /// Unchecked evaluation of all coefficients and first θ-derivatives.
    #[inline]
    pub fn sample(&self, theta: f64, t: f64) -> CoeffSample {
        let (f_scale, b_scale) = self.theta_scales(theta);
        let ft = self.f_t.eval(t);
        let bt = self.b_t.eval(t);
        let (f_dot, a_dot, b_dot) = self.dtheta_raw(theta, t, 1);
        CoeffSample {
            f: f_scale * ft,
            a: self.a_value(theta, t),
            b: b_scale * bt,
            sigma: self.sigma_t.eval(t),
            f_dot,
            a_dot,
            b_dot,
        }
    }

    /// f evaluated without its θ factor, as used by the closed-form
    /// preliminary estimator of the `LINEAR_F` family.
    pub fn f_plain(&self, t: f64) -> f64 {
        self.f_t.eval(t)
    }

    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            family: self.family.id().to_string(),
            params: self
                .params
                .iter()
                .map(|(k, v)| {
                    let value = if v.len() == 1 {
                        ParamValue::Scalar(v[0])
                    } else {
                        ParamValue::Poly(v.to_vec())
                    };
                    (k.to_string(), value)
                })
                .collect(),
            theta_min: self.domain.lo,
            theta_max: self.domain.hi,
            horizon: self.horizon,
            y0: self.y0,
        }
    }
}

/// Serializable model description: family id, flat parameter list,
/// θ-domain endpoints, horizon and initial hidden state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    pub theta_min: f64,
    pub theta_max: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub y0: f64,
}

fn default_horizon() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Poly(Vec<f64>),
}

impl ModelSpec {
    pub fn build(&self) -> Result<CoefficientModel> {
        let family: Family = self.family.parse()?;
        let mut params = Params::new();
        for (k, v) in &self.params {
            params = match v {
                ParamValue::Scalar(x) => params.set(k, *x),
                ParamValue::Poly(c) => params.set_poly(k, c),
            };
        }
        builtin_model(
            family,
            &params,
            (self.theta_min, self.theta_max),
            self.horizon,
            self.y0,
        )
    }
}

/// Outcome of the numerical regularity checks.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub floor: f64,
    pub min_f: f64,
    pub min_b: f64,
    pub min_sigma: f64,
    /// inf |a|; informational only.
    pub inf_abs_a: f64,
    /// Largest relative mismatch between analytic t-derivatives and central
    /// differences over the lattice.
    pub t_derivative_mismatch: f64,
    /// Same for the θ-derivatives (first order, and second order against
    /// differences of the first).
    pub theta_derivative_mismatch: f64,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const DEFAULT_POSITIVITY_FLOOR: f64 = 1e-8;

/// Samples f, b, σ on a θ×t lattice and checks that they stay above the
/// positivity floor; also cross-checks the analytic derivatives.
pub fn validate_conditions(model: &CoefficientModel, theta_grid: usize, t_grid: usize) -> ValidationReport {
    validate_conditions_with_floor(model, theta_grid, t_grid, DEFAULT_POSITIVITY_FLOOR)
}

pub fn validate_conditions_with_floor(
    model: &CoefficientModel,
    theta_grid: usize,
    t_grid: usize,
    floor: f64,
) -> ValidationReport {
    let mut failures = Vec::new();
    if theta_grid < 2 || t_grid < 2 {
        failures.push(format!("lattice sizes must be ≥ 2 (got {theta_grid}×{t_grid})"));
    }
    let thetas = model.domain.lattice(theta_grid);
    let times: Vec<f64> = (0..t_grid.max(2))
        .map(|k| model.horizon * k as f64 / (t_grid.max(2) - 1) as f64)
        .collect();

    let mut min_f = f64::INFINITY;
    let mut min_b = f64::INFINITY;
    let mut min_sigma = f64::INFINITY;
    let mut inf_abs_a = f64::INFINITY;
    let mut t_mismatch: f64 = 0.0;
    let mut th_mismatch: f64 = 0.0;

    let rel = |approx: f64, exact: f64| (approx - exact).abs() / exact.abs().max(1.0);

    for &theta in &thetas {
        for &t in &times {
            let s = model.sample(theta, t);
            min_f = min_f.min(s.f);
            min_b = min_b.min(s.b);
            min_sigma = min_sigma.min(s.sigma);
            inf_abs_a = inf_abs_a.min(s.a.abs());

            let ht = 1e-5 * model.horizon;
            if t - ht >= 0.0 && t + ht <= model.horizon {
                for kind in [CoefficientKind::F, CoefficientKind::A, CoefficientKind::B, CoefficientKind::Sigma] {
                    let up = component(&model.sample(theta, t + ht), kind);
                    let dn = component(&model.sample(theta, t - ht), kind);
                    let fd = (up - dn) / (2.0 * ht);
                    t_mismatch = t_mismatch.max(rel(fd, model.dt_raw(kind, theta, t)));
                }
            }

            let hth = 1e-5 * theta.abs().max(1e-3);
            if model.domain.contains_closed(theta - hth) && model.domain.contains_closed(theta + hth) {
                let (up1, dn1) = (model.dtheta_raw(theta + hth, t, 1), model.dtheta_raw(theta - hth, t, 1));
                let (up0, dn0) = (model.sample(theta + hth, t), model.sample(theta - hth, t));
                let d1 = model.dtheta_raw(theta, t, 1);
                let d2 = model.dtheta_raw(theta, t, 2);
                th_mismatch = th_mismatch
                    .max(rel((up0.f - dn0.f) / (2.0 * hth), d1.0))
                    .max(rel((up0.a - dn0.a) / (2.0 * hth), d1.1))
                    .max(rel((up0.b - dn0.b) / (2.0 * hth), d1.2))
                    .max(rel((up1.0 - dn1.0) / (2.0 * hth), d2.0))
                    .max(rel((up1.1 - dn1.1) / (2.0 * hth), d2.1))
                    .max(rel((up1.2 - dn1.2) / (2.0 * hth), d2.2));
            }
        }
    }

    for (name, value) in [("f", min_f), ("b", min_b), ("σ", min_sigma)] {
        if !(value > floor) {
            failures.push(format!("{name} is not separated from zero: min = {value:e}"));
        }
    }
    if t_mismatch > 1e-4 {
        failures.push(format!("t-derivatives disagree with differences: {t_mismatch:e}"));
    }
    if th_mismatch > 1e-4 {
        failures.push(format!("θ-derivatives disagree with differences: {th_mismatch:e}"));
    }

    ValidationReport {
        floor,
        min_f,
        min_b,
        min_sigma,
        inf_abs_a,
        t_derivative_mismatch: t_mismatch,
        theta_derivative_mismatch: th_mismatch,
        failures,
    }
}

fn component(s: &CoeffSample, kind: CoefficientKind) -> f64 {
    match kind {
        CoefficientKind::F => s.f,
        CoefficientKind::A => s.a,
        CoefficientKind::B => s.b,
        CoefficientKind::Sigma => s.sigma,
    }
}
