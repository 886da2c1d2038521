//! Supervised classifiers of final probability distributions, written from
//! scratch: a linear modified-Huber SGD classifier and a ReLU network.

mod confusion;
mod mlp;
mod sample;
mod svm;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use confusion::{
    confusion_curve, confusion_scan, first_below, sample_size_study, svm_crossing, ConfusionCurve, CriticalRule,
    SampleSizeRow,
};
pub use mlp::{grid_search, train_mlp, Gradient, GridSearchEntry, MlpClassifier, MlpParams};
pub use sample::{
    default_band_width, fingerprint, generate_training_set, max_normalize, max_normalized, normalize_features,
    region_features, region_split, stratified_split, training_sample, Normalization, Sample, TrainingBands,
    DELOCALIZED, LOCALIZED,
};
pub use svm::{modified_huber_loss, train_svm, LinearClassifier, SvmParams, MIN_HOLDOUT_ACCURACY};

use crate::detect::Method;
use crate::error::{Error, Result};

/// A trained classifier of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Svm(LinearClassifier),
    Mlp(MlpClassifier),
}

impl Classifier {
    pub fn p_delocalized(&self, features: &[f64]) -> Result<f64> {
        match self {
            Classifier::Svm(m) => m.p_delocalized(features),
            Classifier::Mlp(m) => m.p_delocalized(features),
        }
    }

    pub fn holdout_accuracy(&self) -> f64 {
        match self {
            Classifier::Svm(m) => m.holdout_accuracy,
            Classifier::Mlp(m) => m.holdout_accuracy,
        }
    }

    pub fn warning(&self) -> Option<&str> {
        match self {
            Classifier::Svm(m) => m.warning.as_deref(),
            Classifier::Mlp(m) => m.warning.as_deref(),
        }
    }

    pub fn training_fingerprint(&self) -> &str {
        match self {
            Classifier::Svm(m) => &m.training_fingerprint,
            Classifier::Mlp(m) => &m.training_fingerprint,
        }
    }

    pub fn input_size(&self) -> usize {
        match self {
            Classifier::Svm(m) => m.weights.len(),
            Classifier::Mlp(m) => m.input_size(),
        }
    }

    pub fn rule(&self) -> CriticalRule {
        match self {
            Classifier::Svm(_) => CriticalRule::Crossing,
            Classifier::Mlp(_) => CriticalRule::FirstBelow,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Classifier::Svm(_) => Method::Svm,
            Classifier::Mlp(_) => Method::Mlp,
        }
    }
}

/// What to train: a classifier kind with its hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Svm(SvmParams),
    Mlp(MlpParams),
}

impl ClassifierSpec {
    pub fn train(&self, samples: &[Sample], seed: u64) -> Result<Classifier> {
        match self {
            ClassifierSpec::Svm(p) => train_svm(samples, p, seed).map(Classifier::Svm),
            ClassifierSpec::Mlp(p) => train_mlp(samples, p, seed).map(Classifier::Mlp),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            ClassifierSpec::Svm(_) => Method::Svm,
            ClassifierSpec::Mlp(_) => Method::Mlp,
        }
    }
}

pub const MODEL_FORMAT: &str = "qwloc-classifier";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    classifier: Classifier,
}

/// Versioned JSON; floats are written in shortest round-trip form.
pub fn model_to_json(classifier: &Classifier) -> Result<String> {
    let file = ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, classifier: classifier.clone() };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn model_from_json(text: &str) -> Result<Classifier> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::ModelFormat(format!("unknown model format {:?}", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!("model version {} is not {MODEL_VERSION}", file.version)));
    }
    Ok(file.classifier)
}

pub fn save_model(classifier: &Classifier, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(classifier)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Classifier> {
    model_from_json(&std::fs::read_to_string(path)?)
}
