//! Linear classifier trained by stochastic gradient descent on the
//! modified-Huber loss.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::sample::{check_samples, fingerprint, normalize_features, stratified_split, Normalization, Sample, LOCALIZED};
use crate::error::{Error, Result};
use crate::randomness::{derive_seed, walk_rng};

/// `(loss, d loss / d z)` at margin `z = y f(x)`.
pub fn modified_huber_loss(z: f64) -> (f64, f64) {
    if z >= -1.0 {
        let g = (1.0 - z).max(0.0);
        (g * g, -2.0 * g)
    } else {
        (-4.0 * z, -4.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub epochs: usize,
    pub eta0: f64,
    pub l2_penalty: f64,
    pub holdout_fraction: f64,
    pub normalization: Normalization,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { epochs: 50, eta0: 0.01, l2_penalty: 1e-4, holdout_fraction: 0.2, normalization: Normalization::Raw }
    }
}

impl SvmParams {
    /// `eta0 / (1 + eta0 * l2_penalty * t)`.
    pub fn learning_rate(&self, t: u64) -> f64 {
        self.eta0 / (1.0 + self.eta0 * self.l2_penalty * t as f64)
    }
}

/// Holdout accuracy below which a trained model carries a warning.
pub const MIN_HOLDOUT_ACCURACY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Decision values are clipped to `[-calibration_clip, calibration_clip]`
    /// before mapping to a probability.
    pub calibration_clip: f64,
    pub params: SvmParams,
    pub holdout_accuracy: f64,
    pub training_fingerprint: String,
    pub warning: Option<String>,
}

impl LinearClassifier {
    /// Raw decision value on features that are already normalized.
    pub fn decision(&self, features: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()
    }

    /// Probability of the localized class from raw features.
    pub fn p_localized(&self, features: &[f64]) -> Result<f64> {
        self.check_dim(features.len())?;
        let x = normalize_features(features, self.params.normalization)?;
        let c = self.calibration_clip;
        Ok((self.decision(&x).clamp(-c, c) / c + 1.0) / 2.0)
    }

    pub fn p_delocalized(&self, features: &[f64]) -> Result<f64> {
        Ok(1.0 - self.p_localized(features)?)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.weights.len() {
            return Err(Error::InvalidParameter(format!("classifier expects {} features, got {len}", self.weights.len())));
        }
        Ok(())
    }
}

fn sign(label: u8) -> f64 {
    if label == LOCALIZED {
        1.0
    } else {
        -1.0
    }
}

/// SGD over a shuffled stratified training split; the rest scores holdout
/// accuracy.
pub fn train_svm(samples: &[Sample], params: &SvmParams, seed: u64) -> Result<LinearClassifier> {
    let dim = check_samples(samples)?;
    if !(params.eta0 > 0.0 && params.l2_penalty >= 0.0 && params.epochs > 0) {
        return Err(Error::InvalidConfig(format!("invalid SVM parameters {params:?}")));
    }
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let (mut train, holdout) = stratified_split(&labels, params.holdout_fraction, derive_seed(seed, &[0]))?;
    let xs: Vec<Vec<f64>> =
        samples.iter().map(|s| normalize_features(&s.features, params.normalization)).collect::<Result<_>>()?;

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut rng = walk_rng(derive_seed(seed, &[1]));
    let mut t = 0u64;
    for _ in 0..params.epochs {
        train.shuffle(&mut rng);
        for &i in &train {
            let eta = params.learning_rate(t);
            let y = sign(labels[i]);
            let x = &xs[i];
            let f = b + w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            let (_, dz) = modified_huber_loss(y * f);
            let shrink = 1.0 - eta * params.l2_penalty;
            let step = eta * dz * y;
            for (wj, xj) in w.iter_mut().zip(x) {
                *wj = *wj * shrink - step * xj;
            }
            b -= step;
            t += 1;
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::TrainingFailed("SGD diverged".into()));
        }
    }

    let mut model = LinearClassifier {
        weights: w,
        bias: b,
        calibration_clip: 1.0,
        params: *params,
        holdout_accuracy: f64::NAN,
        training_fingerprint: fingerprint(samples),
        warning: None,
    };
    let scored = if holdout.is_empty() { &train } else { &holdout };
    let correct = scored.iter().filter(|&&i| (model.decision(&xs[i]) >= 0.0) == (labels[i] == LOCALIZED)).count();
    model.holdout_accuracy = correct as f64 / scored.len() as f64;
    if model.holdout_accuracy < MIN_HOLDOUT_ACCURACY {
        model.warning = Some(format!(
            "holdout accuracy {:.3} is below {MIN_HOLDOUT_ACCURACY}",
            model.holdout_accuracy
        ));
    }
    Ok(model)
}
