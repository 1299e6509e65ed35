//! Experiment configuration, read from TOML:
//!
//! ```toml
//! [model]
//! family = "CONST"          # CONST | LINEAR_F | EXP_A | RECIPROCAL | SQRT_B
//! theta_min = 0.5
//! theta_max = 4.0
//! horizon = 1.0
//! y0 = 0.0
//!
//! [model.params]            # family parameters; scalars or polynomial arrays
//! c_f = 1.0
//!
//! [experiment]
//! theta0 = 2.0
//! eps = [1e-3, 1e-4]
//! delta = [0.25]
//! n_replicates = 300
//! master_seed = 42
//! n_steps = 10000
//! min_steps_per_filter_time = 5.0
//! estimators = ["MLE", "BAYES"]
//! output_dir = "out"
//!
//! [prior]                   # kind = "uniform" | "truncated_gaussian"
//! kind = "uniform"
//!
//! [search]
//! grid_size = 200
//!
//! [bayes]
//! n_quad = 400
//!
//! [one_step]
//! tau = 0.2
//! preliminary = "MDE"       # MDE | MLE | PRELIM
//! ```
//!
//! Every section except `[model]` and `[experiment]` is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientModel, ModelSpec};
use crate::error::{Error, Result};
use crate::estimators::{Method, PriorSpec, SearchConfig};
use crate::kalman_filter::RiccatiScheme;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub bayes: BayesSection,
    #[serde(default)]
    pub one_step: OneStepSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub theta0: f64,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    /// Lower bound on grid points per filter time constant `ε/ψ`
    /// (scaled by `max f b/σ`); 0 keeps `n_steps` as is.
    #[serde(default = "default_min_steps")]
    pub min_steps_per_filter_time: f64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Run even when the identifiability checks fail.
    #[serde(default)]
    pub negative_control: bool,
    /// Zero both noise amplitudes in the simulation.
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// Half-width of the excluded ball in the identifiability checks, as a
    /// fraction of the parameter-set width.
    #[serde(default = "default_nu")]
    pub identifiability_nu: f64,
}

fn default_replicates() -> usize {
    300
}
fn default_steps() -> usize {
    10_000
}
fn default_min_steps() -> f64 {
    5.0
}
fn default_estimators() -> Vec<String> {
    vec!["MLE".into()]
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_scheme() -> String {
    "sampled".into()
}
fn default_nu() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub kind: String,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl Default for PriorSection {
    fn default() -> Self {
        PriorSection {
            kind: "uniform".into(),
            mean: None,
            sd: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub grid_size: usize,
    pub rel_tol: f64,
    pub flat_threshold: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = SearchConfig::default();
        SearchSection {
            grid_size: d.grid_size,
            rel_tol: d.rel_tol,
            flat_threshold: d.flat_threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BayesSection {
    pub n_quad: usize,
}

impl Default for BayesSection {
    fn default() -> Self {
        BayesSection { n_quad: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneStepSection {
    pub tau: f64,
    pub preliminary: String,
}

impl Default for OneStepSection {
    fn default() -> Self {
        OneStepSection {
            tau: 0.2,
            preliminary: "MDE".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build_model(&self) -> Result<CoefficientModel> {
        self.model.build()
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        let mut out: Vec<Method> = self
            .experiment
            .estimators
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn prior_spec(&self) -> Result<PriorSpec> {
        let p = &self.prior;
        let spec = match p.kind.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform" => PriorSpec::Uniform,
            "truncated_gaussian" | "gaussian" => PriorSpec::TruncatedGaussian {
                mean: p.mean.ok_or_else(|| Error::Config("Gaussian prior needs `mean`".into()))?,
                sd: p.sd.ok_or_else(|| Error::Config("Gaussian prior needs `sd`".into()))?,
            },
            other => return Err(Error::Config(format!("unknown prior kind '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            grid_size: self.search.grid_size,
            rel_tol: self.search.rel_tol,
            flat_threshold: self.search.flat_threshold,
        }
    }

    pub fn scheme(&self) -> Result<RiccatiScheme> {
        self.experiment.scheme.parse()
    }

    pub fn preliminary_method(&self) -> Result<Method> {
        match self.one_step.preliminary.parse::<Method>()? {
            m @ (Method::Mde | Method::Mle | Method::Prelim) => Ok(m),
            other => Err(Error::Config(format!("{other} cannot serve as the preliminary estimator"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.build_model().map_err(|e| Error::Config(e.to_string()))?;
        let x = &self.experiment;
        if !model.domain().contains_closed(x.theta0) {
            return Err(Error::Config(format!("theta0 = {} outside the parameter set", x.theta0)));
        }
        if x.eps.is_empty() || x.delta.is_empty() {
            return Err(Error::Config("eps and delta lists must be non-empty".into()));
        }
        if let Some(e) = x.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::Config(format!("eps = {e} outside (0, 1]")));
        }
        if let Some(d) = x.delta.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::Config(format!("delta = {d} outside (0, 1)")));
        }
        if x.n_replicates < 1 {
            return Err(Error::Config("n_replicates must be ≥ 1".into()));
        }
        if x.n_steps < 2 {
            return Err(Error::Config("n_steps must be ≥ 2".into()));
        }
        if !(x.min_steps_per_filter_time >= 0.0 && x.min_steps_per_filter_time.is_finite()) {
            return Err(Error::Config("min_steps_per_filter_time must be ≥ 0".into()));
        }
        if !(x.identifiability_nu > 0.0 && x.identifiability_nu < 1.0) {
            return Err(Error::Config("identifiability_nu must lie in (0, 1)".into()));
        }
        let methods = self.methods()?;
        if methods.is_empty() {
            return Err(Error::Config("no estimators requested".into()));
        }
        self.scheme()?;
        if methods.contains(&Method::Bayes) {
            self.prior_spec()?;
            if self.bayes.n_quad < 32 {
                return Err(Error::Config("bayes.n_quad must be ≥ 32".into()));
            }
        }
        if methods.contains(&Method::OneStep) {
            self.preliminary_method()?;
            if !(self.one_step.tau > 0.0 && self.one_step.tau < model.horizon()) {
                return Err(Error::Config(format!("one_step.tau = {} outside (0, T)", self.one_step.tau)));
            }
        }
        if self.search.grid_size < 3 || !(self.search.rel_tol > 0.0) {
            return Err(Error::Config("search.grid_size must be ≥ 3 and rel_tol > 0".into()));
        }
        Ok(())
    }
}
