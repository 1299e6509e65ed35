//! Coarse-grid scan followed by golden-section refinement.

use crate::coefficients::ThetaDomain;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    /// Points of the coarse grid, endpoints included.
    pub grid_size: usize,
    /// Refinement tolerance as a fraction of the domain width.
    pub rel_tol: f64,
    /// Coarse-grid objective spread below which the result is flagged flat.
    pub flat_threshold: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_size: 200,
            rel_tol: 1e-6,
            flat_threshold: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOutcome {
    pub arg: f64,
    pub value: f64,
    pub n_evals: usize,
    pub boundary_hit: bool,
    pub flat: bool,
    /// max − min of the objective over the coarse grid.
    pub spread: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes `objective` over the closed domain. Non-finite values count
/// as −∞; ties go to the smaller θ.
pub fn maximize<F>(domain: ThetaDomain, cfg: &SearchConfig, mut objective: F) -> Result<SearchOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    if cfg.grid_size < 3 {
        return Err(Error::Config(format!("coarse grid needs ≥ 3 points, got {}", cfg.grid_size)));
    }
    if !(cfg.rel_tol > 0.0) {
        return Err(Error::Config("refinement tolerance must be positive".into()));
    }
    let mut n_evals = 0;
    let mut eval = |theta: f64| -> Result<f64> {
        n_evals += 1;
        let v = objective(theta)?;
        Ok(if v.is_finite() { v } else { f64::NEG_INFINITY })
    };

    let grid = domain.lattice(cfg.grid_size);
    let mut values = Vec::with_capacity(grid.len());
    for &theta in &grid {
        values.push(eval(theta)?);
    }
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    if values[best] == f64::NEG_INFINITY {
        return Err(Error::Estimation("objective is non-finite on the whole grid".into()));
    }
    let finite_min = values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let spread = values[best] - finite_min;

    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let tol = cfg.rel_tol * domain.width();
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    let (mut arg, mut value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if values[best] > value || (values[best] == value && grid[best] < arg) {
        arg = grid[best];
        value = values[best];
    }
    Ok(SearchOutcome {
        arg,
        value,
        n_evals,
        boundary_hit: arg == domain.lo || arg == domain.hi,
        flat: spread < cfg.flat_threshold,
        spread,
    })
}
