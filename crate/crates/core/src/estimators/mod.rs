//! Estimators of θ from one observed path: maximum likelihood, Bayes
//! (posterior mean), minimum distance, the preliminary estimator for
//! `y0 ≠ 0`, and the one-step MLE-process.

mod bayes;
mod likelihood;
mod mde;
pub mod one_step;
mod search;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

pub use bayes::{bayes_estimate, bayes_estimate_scheme, PriorSpec};
pub use likelihood::{log_likelihood, log_likelihood_scheme, mle, mle_scheme, normalized_llr};
pub use mde::{h_function, mde, mde_objective, preliminary_estimator_bar, snap_tau};
pub use one_step::{m_by_parts, one_step_mle_process, one_step_mle_process_scheme, OneStepProcess};
pub use search::{maximize, SearchConfig, SearchOutcome};

use crate::error::{Error, Result};
use crate::sde_sim::fmt_real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mle,
    Bayes,
    Mde,
    OneStep,
    Prelim,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Mle, Method::Bayes, Method::Mde, Method::OneStep, Method::Prelim];

    pub fn id(self) -> &'static str {
        match self {
            Method::Mle => "MLE",
            Method::Bayes => "BAYES",
            Method::Mde => "MDE",
            Method::OneStep => "ONE_STEP",
            Method::Prelim => "PRELIM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        let norm = match norm.as_str() {
            "BE" => "BAYES",
            "ONESTEP" => "ONE_STEP",
            other => other,
        };
        Method::ALL
            .into_iter()
            .find(|m| m.id() == norm)
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EstimationFlags {
    /// Estimate sits on an endpoint of the parameter set.
    pub boundary_hit: bool,
    /// A raw value outside the parameter set was clamped.
    pub clamped: bool,
    /// The objective barely varies over the coarse grid.
    pub flat: bool,
}

impl fmt::Display for EstimationFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.boundary_hit, "boundary_hit"),
            (self.clamped, "clamped"),
            (self.flat, "flat"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        f.write_str(&names.join("|"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub method: Method,
    pub estimate: f64,
    /// Log-likelihood (MLE), log evidence (Bayes), distance (MDE), or the
    /// final correction term (one-step).
    pub objective: f64,
    pub normalized_error: Option<f64>,
    pub n_evals: usize,
    pub flags: EstimationFlags,
}

impl EstimationResult {
    /// Sets `normalized_error = (estimate − θ_true) / scale`.
    pub fn normalize(mut self, theta_true: Option<f64>, scale: f64) -> Self {
        self.normalized_error = theta_true.map(|t| (self.estimate - t) / scale);
        self
    }

    pub const CSV_HEADER: [&'static str; 5] = ["method", "estimate", "objective", "normalized_error", "flags"];

    pub fn csv_record(&self) -> [String; 5] {
        [
            self.method.id().to_string(),
            fmt_real(self.estimate),
            fmt_real(self.objective),
            self.normalized_error.map(fmt_real).unwrap_or_default(),
            self.flags.to_string(),
        ]
    }
}

/// Writes estimation results as CSV rows `method,estimate,objective,normalized_error,flags`.
pub fn write_results_csv<W: Write>(results: &[EstimationResult], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let wrap = |e: csv::Error| Error::csv("<estimates>", e);
    w.write_record(EstimationResult::CSV_HEADER).map_err(wrap)?;
    for r in results {
        w.write_record(r.csv_record()).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<estimates>", e))
}
