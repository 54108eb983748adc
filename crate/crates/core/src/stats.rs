//! Pearson correlation, least-squares lines and equal-count binning.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("number of bins must be at least 1")]
    NoBins,
    #[error("cannot split {items} items into {bins} bins")]
    TooManyBins { bins: usize, items: usize },
}

struct Moments {
    n: usize,
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(points: &[(f64, f64)]) -> Result<Moments, StatsError> {
    if points.len() < 2 {
        return Err(StatsError::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Ok(Moments {
        n: points.len(),
        mean_x,
        mean_y,
        sxx,
        syy,
        sxy,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(points: &[(f64, f64)]) -> Result<f64, StatsError> {
    let m = moments(points)?;
    if m.sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if m.syy == 0.0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    Ok((m.sxy / (m.sxx * m.syy).sqrt()).clamp(-1.0, 1.0))
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitLine {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when `y` is constant and the correlation is undefined.
    pub pearson_r: Option<f64>,
    pub n: usize,
}

impl FitLine {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

pub fn ols_fit(points: &[(f64, f64)]) -> Result<FitLine, StatsError> {
    let m = moments(points)?;
    if m.sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    let slope = m.sxy / m.sxx;
    let pearson_r = (m.syy > 0.0).then(|| (m.sxy / (m.sxx * m.syy).sqrt()).clamp(-1.0, 1.0));
    Ok(FitLine {
        slope,
        intercept: m.mean_y - slope * m.mean_x,
        pearson_r,
        n: m.n,
    })
}

/// Items split into bins of near-equal size by ascending key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualCountBins {
    pub num_bins: usize,
    /// Bin index of each input item, in input order.
    pub assignments: Vec<usize>,
    /// Smallest and largest key in each bin.
    pub bounds: Vec<(f64, f64)>,
    pub sizes: Vec<usize>,
}

impl EqualCountBins {
    /// Input indices assigned to `bin`, in input order.
    pub fn members(&self, bin: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == bin)
            .collect()
    }
}

/// Sorts items by key (stable, so ties keep input order) and cuts the sorted
/// sequence at positions `floor(b * n / k)`.
pub fn equal_count_bins(keys: &[f64], num_bins: usize) -> Result<EqualCountBins, StatsError> {
    if num_bins == 0 {
        return Err(StatsError::NoBins);
    }
    if num_bins > keys.len() {
        return Err(StatsError::TooManyBins {
            bins: num_bins,
            items: keys.len(),
        });
    }
    if keys.iter().any(|k| !k.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = keys.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));

    let mut assignments = vec![0; n];
    let mut bounds = Vec::with_capacity(num_bins);
    let mut sizes = Vec::with_capacity(num_bins);
    for bin in 0..num_bins {
        let start = bin * n / num_bins;
        let end = (bin + 1) * n / num_bins;
        for &i in &order[start..end] {
            assignments[i] = bin;
        }
        bounds.push((keys[order[start]], keys[order[end - 1]]));
        sizes.push(end - start);
    }
    Ok(EqualCountBins {
        num_bins,
        assignments,
        bounds,
        sizes,
    })
}
