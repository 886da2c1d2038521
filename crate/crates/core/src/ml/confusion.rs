//! Classification probability across a parameter sweep and the critical
//! value where the classifier changes its mind.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::{generate_training_set, TrainingBands};
use super::{Classifier, ClassifierSpec};
use crate::detect::{GridCache, SweepRecord};
use crate::error::{Error, Result};
use crate::observables::IprVariant;
use crate::randomness::{derive_seed, ModelKind};
use crate::walk::WalkConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCurve {
    pub param_values: Vec<f64>,
    pub p_delocalized: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalRule {
    /// Linear interpolation of the first downward crossing of 1/2.
    Crossing,
    /// First parameter whose `p_delocalized` is below 1/2.
    FirstBelow,
}

impl ConfusionCurve {
    pub fn new(param_values: Vec<f64>, p_delocalized: Vec<f64>) -> Result<Self> {
        if param_values.len() != p_delocalized.len() {
            return Err(Error::InvalidParameter("confusion curve lengths differ".into()));
        }
        if param_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("confusion curve parameters must be strictly ascending".into()));
        }
        if p_delocalized.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("probabilities must lie in [0, 1]".into()));
        }
        Ok(Self { param_values, p_delocalized })
    }

    pub fn critical_value(&self, rule: CriticalRule) -> Result<f64> {
        match rule {
            CriticalRule::Crossing => svm_crossing(self),
            CriticalRule::FirstBelow => first_below(self),
        }
    }
}

/// First `i` with `p[i - 1] > 1/2 >= p[i]`, interpolated linearly.
pub fn svm_crossing(curve: &ConfusionCurve) -> Result<f64> {
    let (x, p) = (&curve.param_values, &curve.p_delocalized);
    for i in 1..p.len() {
        if p[i - 1] > 0.5 && p[i] <= 0.5 {
            let t = (p[i - 1] - 0.5) / (p[i - 1] - p[i]);
            return Ok(x[i - 1] + t * (x[i] - x[i - 1]));
        }
    }
    Err(Error::NoTransition)
}

/// First parameter with `p < 1/2`, provided the curve starts at or above it.
pub fn first_below(curve: &ConfusionCurve) -> Result<f64> {
    let p = &curve.p_delocalized;
    match p.iter().position(|&v| v < 0.5) {
        Some(i) if i > 0 => Ok(curve.param_values[i]),
        _ => Err(Error::NoTransition),
    }
}

/// `p_delocalized` for every record's final distribution.
pub fn confusion_curve(classifier: &Classifier, records: &[SweepRecord]) -> Result<ConfusionCurve> {
    let p = records
        .par_iter()
        .map(|r| classifier.p_delocalized(&r.distribution.values))
        .collect::<Result<Vec<_>>>()?;
    ConfusionCurve::new(records.iter().map(|r| r.param).collect(), p)
}

/// Runs one walk per grid parameter, classifies each, and applies the
/// classifier's critical-value rule.
pub fn confusion_scan(
    classifier: &Classifier,
    base: &WalkConfig,
    kind: ModelKind,
    param_grid: &[f64],
    replicate: u64,
) -> Result<(ConfusionCurve, f64)> {
    let mut cache = GridCache::new(*base, kind, IprVariant::PlusComponent);
    let grid = cache.grid(param_grid, replicate)?;
    let curve = confusion_curve(classifier, &grid.records)?;
    let critical = curve.critical_value(classifier.rule())?;
    Ok((curve, critical))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeRow {
    pub size: usize,
    /// Critical values of the repetitions that found a transition.
    pub estimates: Vec<f64>,
    pub failures: usize,
}

impl SampleSizeRow {
    /// `max - min` of the estimates, zero for fewer than two.
    pub fn spread(&self) -> f64 {
        if self.estimates.len() < 2 {
            return 0.0;
        }
        let hi = self.estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.estimates.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Retrains `repetitions` classifiers per training-set size, each on fresh
/// samples, and scans them over one shared sweep.
#[allow(clippy::too_many_arguments)]
pub fn sample_size_study(
    base: &WalkConfig,
    kind: ModelKind,
    bands: &TrainingBands,
    sizes: &[usize],
    repetitions: usize,
    scan_params: &[f64],
    spec: &ClassifierSpec,
    seed: u64,
) -> Result<Vec<SampleSizeRow>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("sample sizes must be strictly ascending".into()));
    }
    let mut cache = GridCache::new(base.with_seed(derive_seed(seed, &[u64::MAX])), kind, IprVariant::PlusComponent);
    let scan = cache.grid(scan_params, 0)?;
    let mut rows = Vec::new();
    for &size in sizes {
        let mut row = SampleSizeRow { size, estimates: Vec::new(), failures: 0 };
        for rep in 0..repetitions as u64 {
            let samples = generate_training_set(base, kind, bands, size, derive_seed(seed, &[size as u64, rep]))?;
            let model = spec.train(&samples, derive_seed(seed, &[size as u64, rep, 1]))?;
            match confusion_curve(&model, &scan.records)?.critical_value(model.rule()) {
                Ok(v) => row.estimates.push(v),
                Err(Error::NoTransition) => row.failures += 1,
                Err(e) => return Err(e),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_on_grid_point() {
        let c = ConfusionCurve::new(vec![0.1, 0.2, 0.3, 0.4], vec![1.0, 0.9, 0.5, 0.1]).unwrap();
        assert!((svm_crossing(&c).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn crossing_interpolates() {
        let c = ConfusionCurve::new(vec![0.0, 1.0], vec![0.75, 0.25]).unwrap();
        assert_eq!(svm_crossing(&c).unwrap(), 0.5);
    }

    #[test]
    fn first_point_below_half() {
        let c = ConfusionCurve::new(vec![0.1, 0.2, 0.3], vec![0.8, 0.6, 0.4]).unwrap();
        assert_eq!(first_below(&c).unwrap(), 0.3);
    }

    #[test]
    fn no_crossing_is_an_error() {
        let c = ConfusionCurve::new(vec![0.1, 0.2, 0.3], vec![0.8, 0.7, 0.6]).unwrap();
        assert!(matches!(svm_crossing(&c), Err(Error::NoTransition)));
        assert!(matches!(first_below(&c), Err(Error::NoTransition)));
        let c = ConfusionCurve::new(vec![0.1, 0.2], vec![0.2, 0.1]).unwrap();
        assert!(matches!(svm_crossing(&c), Err(Error::NoTransition)));
        assert!(matches!(first_below(&c), Err(Error::NoTransition)));
    }

    #[test]
    fn spread_of_estimates() {
        let r = SampleSizeRow { size: 1, estimates: vec![0.2, 0.5, 0.3], failures: 0 };
        assert!((r.spread() - 0.3).abs() < 1e-15);
        assert_eq!(SampleSizeRow { size: 1, estimates: vec![0.2], failures: 0 }.spread(), 0.0);
    }
}
