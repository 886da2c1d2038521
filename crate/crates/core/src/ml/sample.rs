//! Labeled training samples: final probability distributions from deep in
//! either regime.

use rand::seq::SliceRandom;
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::observables::ProbabilityDistribution;
use crate::randomness::{derive_seed, evolve_final, walk_rng, ModelKind};
use crate::observables::IprVariant;
use crate::walk::WalkConfig;

pub const DELOCALIZED: u8 = 0;
pub const LOCALIZED: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Features sum to one.
    #[default]
    Raw,
    /// Features divided by their maximum.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: u8,
    pub param_value: f64,
    pub seed: u64,
    pub normalization: Normalization,
}

impl Sample {
    pub fn from_distribution(dist: &ProbabilityDistribution, label: u8, param_value: f64, seed: u64) -> Self {
        Self { features: dist.values.clone(), label, param_value, seed, normalization: Normalization::Raw }
    }

    /// Copy with the requested normalization applied.
    pub fn normalized(&self, normalization: Normalization) -> Result<Sample> {
        match normalization {
            Normalization::Raw => Ok(self.clone()),
            Normalization::Max => max_normalize(self),
        }
    }
}

/// Divides every feature by the largest one.
pub fn max_normalize(sample: &Sample) -> Result<Sample> {
    Ok(Sample { features: max_normalized(&sample.features)?, normalization: Normalization::Max, ..sample.clone() })
}

pub fn max_normalized(features: &[f64]) -> Result<Vec<f64>> {
    let max = features.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateSample);
    }
    Ok(features.iter().map(|&v| v / max).collect())
}

/// Applies `normalization` to raw features.
pub fn normalize_features(features: &[f64], normalization: Normalization) -> Result<Vec<f64>> {
    match normalization {
        Normalization::Raw => Ok(features.to_vec()),
        Normalization::Max => max_normalized(features),
    }
}

/// Parameter intervals sampled for each class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingBands {
    pub delocalized: (f64, f64),
    pub localized: (f64, f64),
}

pub fn default_band_width(kind: ModelKind) -> f64 {
    if kind == ModelKind::RandomTranslation {
        0.1
    } else {
        0.02
    }
}

impl TrainingBands {
    /// Delocalized band from the smallest nonzero grid value upward, localized
    /// band ending at the largest meaningful magnitude.
    pub fn deep(kind: ModelKind, theta0: f64, band_width: f64, grid_points: usize) -> Result<Self> {
        if kind == ModelKind::None {
            return Err(Error::InvalidBand("the model without randomness has no regimes to sample".into()));
        }
        let max = kind.magnitude_max(theta0);
        let lo = max / grid_points.max(1) as f64;
        let bands = Self { delocalized: (lo, lo + band_width), localized: (max - band_width, max) };
        bands.validate()?;
        Ok(bands)
    }

    pub fn validate(&self) -> Result<()> {
        let (d, l) = (self.delocalized, self.localized);
        if !(d.0 <= d.1 && l.0 <= l.1) || ![d.0, d.1, l.0, l.1].iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::InvalidBand(format!("malformed bands {d:?} / {l:?}")));
        }
        if d.1 >= l.0 {
            return Err(Error::InvalidBand(format!("delocalized band {d:?} reaches the localized band {l:?}")));
        }
        Ok(())
    }

    pub fn band(&self, label: u8) -> (f64, f64) {
        if label == LOCALIZED {
            self.localized
        } else {
            self.delocalized
        }
    }
}

/// `n_samples / 2` walks per class, each with its own parameter drawn
/// uniformly in the class band and its own walk seed.
pub fn generate_training_set(
    base: &WalkConfig,
    kind: ModelKind,
    bands: &TrainingBands,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Sample>> {
    if n_samples < 2 || !n_samples.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("n_samples = {n_samples} must be even and at least 2")));
    }
    bands.validate()?;
    let half = n_samples / 2;
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let label = if i < half { DELOCALIZED } else { LOCALIZED };
            let j = (i % half) as u64;
            let (lo, hi) = bands.band(label);
            let mut rng = walk_rng(derive_seed(seed, &[label as u64, j]));
            let param = lo + (hi - lo) * rng.random::<f64>();
            let walk_seed = derive_seed(seed, &[label as u64, j, 1]);
            training_sample(base, kind, label, param, walk_seed)
        })
        .collect()
}

/// One labeled sample; identical `(param, seed)` give identical features.
pub fn training_sample(base: &WalkConfig, kind: ModelKind, label: u8, param: f64, seed: u64) -> Result<Sample> {
    let snap = evolve_final(&base.with_seed(seed), &kind.with_magnitude(param), IprVariant::PlusComponent)?;
    Ok(Sample::from_distribution(&snap.distribution, label, param, seed))
}

/// Sub-vector for region 1 (`-N < x < -N/2`), 2 (`-N/2 < x < N/2`) or
/// 3 (`N/2 < x < N`) of a sample on sites `-N ..= N`.
pub fn region_split(sample: &Sample, region: u8) -> Result<Sample> {
    Ok(Sample { features: region_features(&sample.features, region)?, ..sample.clone() })
}

pub fn region_features(features: &[f64], region: u8) -> Result<Vec<f64>> {
    if features.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("feature length {} is not 2N+1", features.len())));
    }
    let n = ((features.len() - 1) / 2) as i64;
    let half = n as f64 / 2.0;
    let keep = |x: i64| {
        let x = x as f64;
        match region {
            1 => -(n as f64) < x && x < -half,
            2 => -half < x && x < half,
            _ => half < x && x < n as f64,
        }
    };
    if !(1..=3).contains(&region) {
        return Err(Error::InvalidRegion(region));
    }
    Ok((-n..=n).zip(features).filter(|(x, _)| keep(*x)).map(|(_, &v)| v).collect())
}

/// Stratified split into `(train, holdout)` index lists; each class gives
/// `round(fraction * count)` members to the holdout, at least one when the
/// class has two or more samples and `fraction > 0`.
pub fn stratified_split(labels: &[u8], holdout_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&holdout_fraction) {
        return Err(Error::InvalidConfig(format!("holdout fraction {holdout_fraction} must lie in [0, 1)")));
    }
    let mut rng = walk_rng(seed);
    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for class in [DELOCALIZED, LOCALIZED] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: idx.len() });
        }
        idx.shuffle(&mut rng);
        let mut k = (holdout_fraction * idx.len() as f64).round() as usize;
        if holdout_fraction > 0.0 {
            k = k.clamp(1, idx.len() - 1);
        }
        holdout.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    Ok((train, holdout))
}

/// Hex SHA-256 over labels, parameters, seeds and feature bits.
pub fn fingerprint(samples: &[Sample]) -> String {
    let mut h = Sha256::new();
    h.update((samples.len() as u64).to_le_bytes());
    for s in samples {
        h.update([s.label]);
        h.update(s.param_value.to_bits().to_le_bytes());
        h.update(s.seed.to_le_bytes());
        h.update((s.features.len() as u64).to_le_bytes());
        for v in &s.features {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn check_samples(samples: &[Sample]) -> Result<usize> {
    let dim = samples.first().map(|s| s.features.len()).ok_or(Error::InsufficientData { needed: 4, got: 0 })?;
    if let Some(s) = samples.iter().find(|s| s.features.len() != dim) {
        return Err(Error::InvalidParameter(format!("feature length {} differs from {dim}", s.features.len())));
    }
    if let Some(s) = samples.iter().find(|s| s.label > 1) {
        return Err(Error::InvalidParameter(format!("label {} is not 0 or 1", s.label)));
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(features: Vec<f64>) -> Sample {
        Sample { features, label: 0, param_value: 0.0, seed: 0, normalization: Normalization::Raw }
    }

    #[test]
    fn max_normalize_examples() {
        let s = max_normalize(&sample(vec![0.2, 0.4, 0.4])).unwrap();
        assert_eq!(s.features, vec![0.5, 1.0, 1.0]);
        assert_eq!(max_normalize(&s).unwrap().features, s.features);
        let delta = vec![0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(max_normalize(&sample(delta.clone())).unwrap().features, delta);
        assert!(matches!(max_normalize(&sample(vec![0.0; 3])), Err(Error::DegenerateSample)));
    }

    #[test]
    fn region_split_n4() {
        let s = sample((0..9).map(|i| i as f64).collect());
        // sites -4..=4 hold 0..=8
        assert_eq!(region_split(&s, 2).unwrap().features, vec![3.0, 4.0, 5.0]);
        assert_eq!(region_split(&s, 1).unwrap().features, vec![1.0]);
        assert_eq!(region_split(&s, 3).unwrap().features, vec![7.0]);
        assert!(matches!(region_split(&s, 4), Err(Error::InvalidRegion(4))));
    }

    #[test]
    fn regions_are_symmetric_subsets() {
        for n in 1..30usize {
            let s = sample(vec![1.0; 2 * n + 1]);
            let l: Vec<usize> = (1..=3).map(|r| region_split(&s, r).unwrap().features.len()).collect();
            assert_eq!(l[0], l[2]);
            assert!(l.iter().sum::<usize>() <= 2 * n + 1);
        }
    }

    #[test]
    fn balanced_training_set() {
        let base = WalkConfig::new(10, PI / 6.0, 0);
        let bands = TrainingBands::deep(ModelKind::DiscreteAngle, PI / 6.0, 0.02, 50).unwrap();
        let set = generate_training_set(&base, ModelKind::DiscreteAngle, &bands, 4, 7).unwrap();
        assert_eq!(set.iter().filter(|s| s.label == 0).count(), 2);
        assert_eq!(set.iter().filter(|s| s.label == 1).count(), 2);
        for s in &set {
            let (lo, hi) = bands.band(s.label);
            assert!(s.param_value >= lo && s.param_value <= hi);
            assert_eq!(s.features.len(), 21);
        }
        assert!((bands.delocalized.1 - bands.delocalized.0 - 0.02).abs() < 1e-15);
        assert_eq!(set, generate_training_set(&base, ModelKind::DiscreteAngle, &bands, 4, 7).unwrap());
    }

    #[test]
    fn same_param_and_seed_same_features() {
        let base = WalkConfig::new(12, PI / 6.0, 0);
        let a = training_sample(&base, ModelKind::DiscreteAngle, 0, 0.1, 99).unwrap();
        let b = training_sample(&base, ModelKind::DiscreteAngle, 1, 0.1, 99).unwrap();
        assert_eq!(a.features, b.features);
    }

    #[test]
    fn overlapping_bands_rejected() {
        assert!(matches!(TrainingBands::deep(ModelKind::DiscreteAngle, PI / 6.0, 0.3, 50), Err(Error::InvalidBand(_))));
        assert!(matches!(TrainingBands::deep(ModelKind::None, PI / 6.0, 0.02, 50), Err(Error::InvalidBand(_))));
        let base = WalkConfig::new(10, PI / 6.0, 0);
        let bad = TrainingBands { delocalized: (0.0, 0.3), localized: (0.2, 0.5) };
        assert!(generate_training_set(&base, ModelKind::DiscreteAngle, &bad, 4, 0).is_err());
    }

    #[test]
    fn split_is_stratified() {
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let (train, hold) = stratified_split(&labels, 0.2, 5).unwrap();
        assert_eq!(hold.len(), 20);
        assert_eq!(train.len(), 80);
        assert_eq!(hold.iter().filter(|&&i| labels[i] == 1).count(), 10);
    }
}
