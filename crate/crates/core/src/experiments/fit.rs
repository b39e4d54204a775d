//! Log-log least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum sample count for fits of densely sampled `tau` tails.
pub const TAIL_MIN_POINTS: usize = 20;

/// `y = exp(log_prefactor) * x^exponent`, fitted on `window`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Natural logarithm of the prefactor.
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl PowerLawFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.log_prefactor + self.exponent * x.ln()).exp()
    }

    /// Abscissa where two fitted lines cross, if they are not parallel.
    pub fn intersection(&self, other: &PowerLawFit) -> Option<f64> {
        let slope = self.exponent - other.exponent;
        if slope == 0.0 {
            return None;
        }
        Some(((other.log_prefactor - self.log_prefactor) / slope).exp())
    }
}

/// Fits a power law to the points with `x` inside the closed `window`.
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: (f64, f64), min_points: usize) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidWindow(format!("fit window [{lo}, {hi}] is empty")));
    }
    let mut logs = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if !(lo..=hi).contains(&x) {
            continue;
        }
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::NonPositiveData { x, y });
        }
        logs.push((x.ln(), y.ln()));
    }
    let required = min_points.max(2);
    if logs.len() < required {
        return Err(Error::TooFewPoints { required, got: logs.len() });
    }

    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidWindow("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - residual / syy).clamp(0.0, 1.0) };
    Ok(PowerLawFit { exponent: slope, log_prefactor: intercept, r_squared, window, points: logs.len() })
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut grid: Vec<f64> = (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect();
            grid[0] = lo;
            grid[count - 1] = hi;
            grid
        }
    }
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn exact_power_law() {
        let xs = log_grid(1.0, 100.0, 30);
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(-2)).collect();
        let fit = fit_power_law(&xs, &ys, (1.0, 100.0), TAIL_MIN_POINTS).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-12);
        assert!(fit.log_prefactor.abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.points, 30);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let xs = log_grid(10.0, 1000.0, 200);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 3.0 * x.powi(-4) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let fit = fit_power_law(&xs, &ys, (10.0, 1000.0), TAIL_MIN_POINTS).unwrap();
        assert!((fit.exponent + 4.0).abs() < 0.05);
        assert!((fit.log_prefactor - 3f64.ln()).abs() < 0.05);
    }

    #[test]
    fn mixed_tail_tends_to_lower_exponent() {
        let xs = log_grid(1e4, 1e6, 100);
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x.powi(-3) + 500.0 * x.powi(-4)).collect();
        let far = fit_power_law(&xs, &ys, (1e5, 1e6), TAIL_MIN_POINTS).unwrap();
        let near = fit_power_law(&xs, &ys, (1e4, 1e5), TAIL_MIN_POINTS).unwrap();
        assert!((far.exponent + 3.0).abs() < 0.01);
        assert!(near.exponent < far.exponent);
    }

    #[test]
    fn rejects_bad_input() {
        let xs = log_grid(1.0, 10.0, 25);
        let mut ys = vec![1.0; 25];
        ys[3] = 0.0;
        assert!(matches!(fit_power_law(&xs, &ys, (1.0, 10.0), 20), Err(Error::NonPositiveData { .. })));
        let ys = vec![1.0; 25];
        assert!(matches!(fit_power_law(&xs, &ys, (1.0, 2.0), 20), Err(Error::TooFewPoints { .. })));
        assert!(fit_power_law(&xs, &ys, (5.0, 1.0), 2).is_err());
    }

    #[test]
    fn line_intersection() {
        let a = PowerLawFit { exponent: -4.0, log_prefactor: 10.0, r_squared: 1.0, window: (1.0, 2.0), points: 20 };
        let b = PowerLawFit { exponent: -3.0, log_prefactor: 0.0, r_squared: 1.0, window: (3.0, 4.0), points: 20 };
        let x = a.intersection(&b).unwrap();
        assert!((a.predict(x) / b.predict(x) - 1.0).abs() < 1e-12);
        assert!((x - 10f64.exp()).abs() / x < 1e-12);
        assert!(a.intersection(&a).is_none());
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = log_grid(100.0, 1000.0, 7);
        assert_eq!((g[0], g[6]), (100.0, 1000.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(linear_grid(1.0, 5.0, 41)[40], 5.0);
    }
}
