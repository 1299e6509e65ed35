use crate::coefficients::{CoefficientModel, ThetaDomain};
use crate::error::{Error, Result};
use crate::kalman_filter::RiccatiScheme;
use crate::quadrature::simpson_weights;
use crate::sde_sim::SamplePath;

use super::likelihood::log_likelihood_scheme;
use super::{EstimationFlags, EstimationResult, Method};

/// Prior density on the parameter set (unnormalized).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PriorSpec {
    Uniform,
    TruncatedGaussian { mean: f64, sd: f64 },
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::Uniform => Ok(()),
            PriorSpec::TruncatedGaussian { mean, sd } if mean.is_finite() && sd > 0.0 && sd.is_finite() => Ok(()),
            PriorSpec::TruncatedGaussian { .. } => Err(Error::Config("Gaussian prior needs finite mean and sd > 0".into())),
        }
    }

    pub fn density(&self, theta: f64) -> f64 {
        match *self {
            PriorSpec::Uniform => 1.0,
            PriorSpec::TruncatedGaussian { mean, sd } => {
                let z = (theta - mean) / sd;
                (-0.5 * z * z).exp()
            }
        }
    }
}

fn nodes(domain: ThetaDomain, n_quad: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (n_quad + 1) & !1;
    let h = domain.width() / n as f64;
    let thetas = (0..=n)
        .map(|k| if k == n { domain.hi } else { domain.lo + k as f64 * h })
        .collect();
    (thetas, simpson_weights(n, h))
}

/// Posterior mean under quadratic loss, default scheme.
pub fn bayes_estimate(
    model: &CoefficientModel,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    prior: &PriorSpec,
    n_quad: usize,
) -> Result<EstimationResult> {
    bayes_estimate_scheme(model, eps, psi, obs, prior, n_quad, RiccatiScheme::SampledData)
}

/// Posterior mean by composite Simpson quadrature on the parameter set
/// with the likelihood rescaled by its maximum before exponentiation.
pub fn bayes_estimate_scheme(
    model: &CoefficientModel,
    eps: f64,
    psi: f64,
    obs: &SamplePath,
    prior: &PriorSpec,
    n_quad: usize,
    scheme: RiccatiScheme,
) -> Result<EstimationResult> {
    if n_quad < 32 {
        return Err(Error::Config(format!("n_quad must be ≥ 32, got {n_quad}")));
    }
    prior.validate()?;
    let (thetas, weights) = nodes(model.domain(), n_quad);
    let mut ll = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        let v = log_likelihood_scheme(model, theta, eps, psi, obs, scheme)?;
        ll.push(if v.is_finite() { v } else { f64::NEG_INFINITY });
    }
    let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::Estimation("log-likelihood non-finite at every node".into()));
    }
    let (mut mass, mut first) = (0.0, 0.0);
    for ((&theta, &w), &l) in thetas.iter().zip(&weights).zip(&ll) {
        let p = w * prior.density(theta) * (l - top).exp();
        mass += p;
        first += p * theta;
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Estimation("posterior mass vanished".into()));
    }
    let estimate = model.domain().clamp(first / mass);
    Ok(EstimationResult {
        method: Method::Bayes,
        estimate,
        objective: top + mass.ln(),
        normalized_error: None,
        n_evals: thetas.len(),
        flags: EstimationFlags {
            boundary_hit: estimate == model.domain().lo || estimate == model.domain().hi,
            ..Default::default()
        },
    }
    .normalize(obs.theta_true, (eps / psi).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{builtin_model, Family, Params};
    use crate::sde_sim::TimeGrid;

    fn flat_case() -> (CoefficientModel, SamplePath) {
        let m = builtin_model(Family::Const, &Params::new(), (0.5, 4.0), 1.0, 0.0).unwrap();
        let g = TimeGrid::new(50, 1.0).unwrap();
        (m, SamplePath::from_observations(g, vec![0.0; 51]).unwrap())
    }

    #[test]
    fn flat_likelihood_uniform_prior_gives_midpoint() {
        let (m, obs) = flat_case();
        let r = bayes_estimate(&m, 1e-3, 0.1, &obs, &PriorSpec::Uniform, 400).unwrap();
        assert!((r.estimate - 2.25).abs() < 1e-10);
    }

    #[test]
    fn flat_likelihood_gaussian_prior_gives_prior_mean() {
        let (m, obs) = flat_case();
        let prior = PriorSpec::TruncatedGaussian { mean: 1.5, sd: 0.7 };
        let r = bayes_estimate(&m, 1e-3, 0.1, &obs, &prior, 400).unwrap();
        let (thetas, w) = nodes(m.domain(), 400);
        let num: f64 = thetas.iter().zip(&w).map(|(t, w)| t * w * prior.density(*t)).sum();
        let den: f64 = thetas.iter().zip(&w).map(|(t, w)| w * prior.density(*t)).sum();
        assert!((r.estimate - num / den).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_settings() {
        let (m, obs) = flat_case();
        assert!(bayes_estimate(&m, 1e-3, 0.1, &obs, &PriorSpec::Uniform, 16).is_err());
        let bad = PriorSpec::TruncatedGaussian { mean: 1.0, sd: 0.0 };
        assert!(bayes_estimate(&m, 1e-3, 0.1, &obs, &bad, 64).is_err());
    }
}
