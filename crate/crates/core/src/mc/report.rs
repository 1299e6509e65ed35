//! CSV reports for an [`McSummary`].
//!
//! `summary.csv`, one row per (ε, δ, estimator):
//!
//! ```text
//! eps,delta,psi,n_steps,h,estimator,n_ok,n_failed,mean,variance,rmse,raw_rmse,
//! skewness,excess_kurtosis,ks_distance,ks_standardized,abs_moment_1,
//! abs_moment_2,abs_moment_4,boundary_fraction,theoretical_variance,fisher
//! ```
//!
//! `errors_eps<ε>_delta<δ>.csv`: `replicate,seed,<one column per estimator>`
//! holding normalized errors, empty where the estimator failed.
//!
//! `rateplot.csv`: `delta,estimator,eps,log10_eps,raw_rmse,log10_rmse`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::sde_sim::fmt_real;

use super::harness::McSummary;
use super::stats::ols_slope;

pub const SUMMARY_HEADER: [&str; 22] = [
    "eps",
    "delta",
    "psi",
    "n_steps",
    "h",
    "estimator",
    "n_ok",
    "n_failed",
    "mean",
    "variance",
    "rmse",
    "raw_rmse",
    "skewness",
    "excess_kurtosis",
    "ks_distance",
    "ks_standardized",
    "abs_moment_1",
    "abs_moment_2",
    "abs_moment_4",
    "boundary_fraction",
    "theoretical_variance",
    "fisher",
];

pub const RATEPLOT_HEADER: [&str; 6] = ["delta", "estimator", "eps", "log10_eps", "raw_rmse", "log10_rmse"];

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn methods_of(summary: &McSummary) -> Vec<Method> {
    let mut out: Vec<Method> = summary
        .cells
        .iter()
        .flat_map(|c| c.methods.iter().map(|m| m.method))
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn summary_rows(summary: &McSummary) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for cell in &summary.cells {
        for m in &cell.methods {
            let nan = f64::NAN;
            let s = m.stats.as_ref();
            let g = |f: fn(&super::stats::Stats) -> f64| fmt_real(s.map_or(nan, f));
            rows.push(vec![
                fmt_real(cell.eps),
                fmt_real(cell.delta),
                fmt_real(cell.psi),
                cell.n_steps.to_string(),
                fmt_real(cell.h),
                m.method.id().to_string(),
                m.n_ok.to_string(),
                m.n_failed.to_string(),
                g(|s| s.mean),
                g(|s| s.variance),
                g(|s| s.rmse),
                fmt_real(m.raw_rmse),
                g(|s| s.skewness),
                g(|s| s.excess_kurtosis),
                g(|s| s.ks_distance),
                g(|s| s.ks_standardized),
                g(|s| s.abs_moments[0]),
                g(|s| s.abs_moments[1]),
                g(|s| s.abs_moments[2]),
                fmt_real(m.boundary_fraction),
                fmt_real(m.reference_variance),
                fmt_real(summary.fisher),
            ]);
        }
    }
    rows
}

pub fn rateplot_rows(summary: &McSummary) -> Vec<Vec<String>> {
    let mut cells: Vec<_> = summary.cells.iter().collect();
    cells.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(b.eps.total_cmp(&a.eps)));
    let mut rows = Vec::new();
    for method in methods_of(summary) {
        for cell in &cells {
            if let Some(m) = cell.method(method) {
                rows.push(vec![
                    fmt_real(cell.delta),
                    method.id().to_string(),
                    fmt_real(cell.eps),
                    fmt_real(cell.eps.log10()),
                    fmt_real(m.raw_rmse),
                    fmt_real(m.raw_rmse.log10()),
                ]);
            }
        }
    }
    rows
}

/// Slope of `log10 raw_rmse` against `log10 ε`, per (δ, estimator) with at
/// least two ε values and finite RMSEs.
pub fn rate_slopes(summary: &McSummary) -> Vec<(f64, Method, f64)> {
    let mut deltas: Vec<f64> = summary.cells.iter().map(|c| c.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut out = Vec::new();
    for &delta in &deltas {
        for method in methods_of(summary) {
            let (x, y): (Vec<f64>, Vec<f64>) = summary
                .cells
                .iter()
                .filter(|c| c.delta == delta)
                .filter_map(|c| c.method(method).map(|m| (c.eps.log10(), m.raw_rmse.log10())))
                .filter(|(_, y)| y.is_finite())
                .unzip();
            if let Ok(slope) = ols_slope(&x, &y) {
                out.push((delta, method, slope));
            }
        }
    }
    out
}

/// Writes the report files into `out_dir` (created if missing) and returns
/// their paths.
pub fn emit_report(summary: &McSummary, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let header = |h: &[&str]| h.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut written = Vec::new();

    let path = out_dir.join("summary.csv");
    write_rows(&path, &header(&SUMMARY_HEADER), &summary_rows(summary))?;
    written.push(path);

    let methods = methods_of(summary);
    for cell in &summary.cells {
        let mut h = header(&["replicate", "seed"]);
        h.extend(methods.iter().map(|m| m.id().to_string()));
        let rows: Vec<Vec<String>> = cell
            .replicates
            .iter()
            .map(|r| {
                let mut row = vec![r.index.to_string(), r.seed.to_string()];
                row.extend(methods.iter().map(|&m| {
                    r.get(m)
                        .and_then(|e| e.normalized_error)
                        .map(fmt_real)
                        .unwrap_or_default()
                }));
                row
            })
            .collect();
        let path = out_dir.join(format!("errors_{}.csv", cell.label()));
        write_rows(&path, &h, &rows)?;
        written.push(path);
    }

    let path = out_dir.join("rateplot.csv");
    write_rows(&path, &header(&RATEPLOT_HEADER), &rateplot_rows(summary))?;
    written.push(path);
    Ok(written)
}
