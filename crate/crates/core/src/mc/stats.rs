//! Summary statistics of normalized errors. Values are sorted before any
//! accumulation, so the results do not depend on replicate order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `√(mean of squares)`.
    pub rmse: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov-Smirnov distance to `N(0, 1/fisher)`.
    pub ks_distance: f64,
    /// Kolmogorov-Smirnov distance to `N(0, 1)` after centering and scaling
    /// by the sample mean and deviation (NaN when degenerate).
    pub ks_standardized: f64,
    /// `E|ζ|^p` for p = 1, 2, 4.
    pub abs_moments: [f64; 3],
    /// All values equal.
    pub degenerate: bool,
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// KS distance of sorted `values` to the CDF `cdf`.
pub fn ks_distance_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let p = cdf(x);
        d = d.max((i + 1) as f64 / n - p).max(p - i as f64 / n);
    }
    d.clamp(0.0, 1.0)
}

pub fn summarize(errors: &[f64], fisher: f64) -> Result<Stats> {
    if errors.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: errors.len(),
        });
    }
    if errors.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("summarize needs finite values".into()));
    }
    let mut v = errors.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = v.iter().map(|x| x - mean).collect();
    dev.sort_by(f64::total_cmp);
    let m2 = dev.iter().map(|d| d * d).sum::<f64>() / n;
    let m3 = dev.iter().map(|d| d * d * d).sum::<f64>() / n;
    let m4 = dev.iter().map(|d| d * d * d * d).sum::<f64>() / n;
    let variance = m2 * n / (n - 1.0);
    let degenerate = v[0] == v[v.len() - 1];
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    let abs_moment = |p: i32| v.iter().map(|x| x.abs().powi(p)).sum::<f64>() / n;
    let scale = if fisher > 0.0 { 1.0 / fisher.sqrt() } else { f64::NAN };
    let ks_distance = if scale.is_finite() {
        ks_distance_sorted(&v, |x| normal_cdf(x / scale))
    } else {
        f64::NAN
    };
    let sd = variance.sqrt();
    let ks_standardized = if sd > 0.0 {
        ks_distance_sorted(&v, |x| normal_cdf((x - mean) / sd))
    } else {
        f64::NAN
    };
    Ok(Stats {
        n: v.len(),
        mean,
        variance,
        rmse: abs_moment(2).sqrt(),
        skewness,
        excess_kurtosis,
        ks_distance,
        ks_standardized,
        abs_moments: [abs_moment(1), abs_moment(2), abs_moment(4)],
        degenerate,
    })
}

/// Root mean square of the values (sorted accumulation).
pub fn rms(values: &[f64]) -> f64 {
    let mut sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    sq.sort_by(f64::total_cmp);
    (sq.iter().sum::<f64>() / values.len() as f64).sqrt()
}

/// Percentile bootstrap interval of `stat` at confidence `level`.
pub fn bootstrap_interval<F>(values: &[f64], stat: F, resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) || resamples < 10 {
        return Err(Error::Contract("bootstrap needs level in (0,1) and ≥ 10 resamples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; values.len()];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = values[rng.random_range(0..values.len())];
            }
            stat(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (resamples - 1) as f64;
        let (lo, frac) = (pos.floor() as usize, pos - pos.floor());
        let hi = (lo + 1).min(resamples - 1);
        stats[lo] + frac * (stats[hi] - stats[lo])
    };
    let tail = 0.5 * (1.0 - level);
    Ok((q(tail), q(1.0 - tail)))
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len().min(y.len()),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Contract("regression needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}
