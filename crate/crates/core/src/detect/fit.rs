//! Straight-line fits in log-log coordinates: single power laws and the
//! two-segment "kink" fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals.
    pub sse: f64,
    /// Total sum of squares about the mean of `y`.
    pub sst: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    LineFit { slope, intercept, sse, sst: syy }
}

/// `critical_value ~ prefactor * n^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

impl PowerLawFit {
    pub fn predict(&self, n: f64) -> f64 {
        self.prefactor * n.powf(-self.exponent)
    }
}

/// Least-squares power law through `(n, value)` pairs.
///
/// The exponent is reported with the sign convention `value ~ n^(-exponent)`,
/// so a critical value that shrinks with system size has a positive exponent.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: points.len() });
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain(format!("power-law fit needs positive coordinates, got ({x}, {y})")));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&lx, &ly);
    let r_squared = if line.sst > 0.0 { (1.0 - line.sse / line.sst).clamp(0.0, 1.0) } else { 1.0 };
    Ok(PowerLawFit { exponent: -line.slope, prefactor: line.intercept.exp(), r_squared })
}

/// Result of the two-segment log-log fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinkFit {
    pub breakpoint: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    /// Residual of the best two-segment fit.
    pub residual: f64,
    /// Residual of a single line through all points.
    pub single_residual: f64,
}

impl KinkFit {
    /// Fractional residual reduction over the single-line fit.
    pub fn improvement(&self) -> f64 {
        if self.single_residual > 0.0 {
            1.0 - self.residual / self.single_residual
        } else {
            0.0
        }
    }
}

pub const KINK_MIN_POINTS: usize = 8;
pub const KINK_MIN_IMPROVEMENT: f64 = 0.05;

/// Locates the kink of a curve by fitting two straight segments in log-log
/// coordinates.
///
/// Every interior point is tried as the breakpoint; the two segments share
/// it and each spans at least three points. The breakpoint with the smallest
/// total squared residual wins, ties going to the smaller abscissa.
pub fn moi_kink(points: &[(f64, f64)]) -> Result<KinkFit> {
    if points.len() < KINK_MIN_POINTS {
        return Err(Error::InsufficientData { needed: KINK_MIN_POINTS, got: points.len() });
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain(format!("kink fit is done in log-log space; got ({x}, {y})")));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lx: Vec<f64> = sorted.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = sorted.iter().map(|p| p.1.ln()).collect();
    let n = lx.len();

    let single = fit_line(&lx, &ly);
    let mut best: Option<KinkFit> = None;
    for k in 2..=n - 3 {
        let left = fit_line(&lx[..=k], &ly[..=k]);
        let right = fit_line(&lx[k..], &ly[k..]);
        let residual = left.sse + right.sse;
        if best.is_none_or(|b| residual < b.residual) {
            best = Some(KinkFit {
                breakpoint: sorted[k].0,
                left_slope: left.slope,
                right_slope: right.slope,
                residual,
                single_residual: single.sse,
            });
        }
    }
    let best = best.expect("at least eight points leave a candidate breakpoint");
    // a single segment that is already exact up to rounding has no kink
    let floor = 1e-20 * (1.0 + single.sst);
    if single.sse <= floor || best.improvement() < KINK_MIN_IMPROVEMENT {
        return Err(Error::NoKink { improvement: if single.sse <= floor { 0.0 } else { best.improvement() } });
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [10.0, 20.0, 40.0, 80.0, 160.0].iter().map(|&n: &f64| (n, 2.0 * n.powf(-0.5))).collect();
        let fit = power_law_fit(&pts).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-10);
        assert!((fit.prefactor - 2.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_data_has_zero_exponent() {
        let pts: Vec<_> = [50.0, 100.0, 200.0, 400.0].iter().map(|&n| (n, 7.0)).collect();
        let fit = power_law_fit(&pts).unwrap();
        assert!(fit.exponent.abs() < 1e-10);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn power_law_errors() {
        assert!(matches!(power_law_fit(&[(1.0, 1.0), (2.0, 2.0)]), Err(Error::InsufficientData { .. })));
        assert!(matches!(power_law_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(Error::Domain(_))));
        assert!(matches!(power_law_fit(&[(-1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]), Err(Error::Domain(_))));
    }

    #[test]
    fn constructed_kink_is_found() {
        let pts: Vec<_> = (1..=30).map(|i| {
            let x = i as f64;
            (x, if x < 10.0 { x } else { 10.0 })
        }).collect();
        let fit = moi_kink(&pts).unwrap();
        assert_eq!(fit.breakpoint, 10.0);
        assert!((fit.left_slope - 1.0).abs() < 1e-12);
        assert!(fit.right_slope.abs() < 1e-12);
    }

    #[test]
    fn pure_power_law_has_no_kink() {
        let pts: Vec<_> = (1..=20).map(|i| (i as f64, (i as f64).powf(0.7))).collect();
        assert!(matches!(moi_kink(&pts), Err(Error::NoKink { .. })));
    }

    #[test]
    fn kink_needs_eight_points() {
        let pts: Vec<_> = (1..=7).map(|i| (i as f64, i as f64)).collect();
        assert!(matches!(moi_kink(&pts), Err(Error::InsufficientData { needed: 8, got: 7 })));
    }
}
