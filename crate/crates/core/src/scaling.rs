//! Critical value versus system size for every detection method, and the
//! power-law exponents of those curves.

use serde::{Deserialize, Serialize};

use crate::detect::{
    coarse_grid, human_method, ipr_method, median, moi_method, power_law_fit, refine_grid, CriticalEstimate,
    GridCache, Method, PowerLawFit, SweepGrid,
};
use crate::error::{Error, Result};
use crate::ml::{confusion_curve, generate_training_set, Classifier, ClassifierSpec, MlpParams, SvmParams, TrainingBands};
use crate::observables::{IprVariant, PeakConfig};
use crate::randomness::{derive_seed, ModelKind};
use crate::walk::WalkConfig;

/// Share of system sizes a method may fail on before it is unreliable.
pub const MAX_FAILURE_SHARE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub n_samples: usize,
    /// Width of each class band; the model's default when absent.
    pub band_width: Option<f64>,
    pub svm: SvmParams,
    pub mlp: MlpParams,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { n_samples: 1800, band_width: None, svm: SvmParams::default(), mlp: MlpParams::default() }
    }
}

impl TrainingConfig {
    pub fn spec(&self, method: Method) -> Option<ClassifierSpec> {
        match method {
            Method::Svm => Some(ClassifierSpec::Svm(self.svm)),
            Method::Mlp => Some(ClassifierSpec::Mlp(self.mlp.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub kind: ModelKind,
    pub theta0: f64,
    /// Lattice half-width shared by every system size.
    pub n_max: usize,
    /// Evolution steps, used as the system size.
    pub n_values: Vec<usize>,
    pub methods: Vec<Method>,
    pub grid_points: usize,
    pub refine_factor: usize,
    /// Independent sweeps per size; the median estimate is kept.
    pub replicates: usize,
    pub peak: PeakConfig,
    pub ipr_variant: IprVariant,
    pub ipr_refine: bool,
    pub training: TrainingConfig,
    pub seed: u64,
}

impl ScalingConfig {
    pub fn new(kind: ModelKind, theta0: f64, n_max: usize, n_values: Vec<usize>, seed: u64) -> Self {
        Self {
            kind,
            theta0,
            n_max,
            n_values,
            methods: Method::ALL.to_vec(),
            grid_points: 50,
            refine_factor: 5,
            replicates: 1,
            peak: PeakConfig::default(),
            ipr_variant: IprVariant::PlusComponent,
            ipr_refine: true,
            training: TrainingConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.len() < 3 {
            // a power law through fewer than three sizes is undetermined
            return Err(Error::InsufficientData { needed: 3, got: self.n_values.len() });
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("system sizes must be strictly ascending".into()));
        }
        if self.grid_points < 3 || self.replicates == 0 {
            return Err(Error::InvalidConfig("grid_points must be at least 3 and replicates at least 1".into()));
        }
        for &n in &self.n_values {
            WalkConfig::new(self.n_max, self.theta0, self.seed).with_steps(n).validate()?;
        }
        Ok(())
    }
}

/// A method's record across all system sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub fit: Option<PowerLawFit>,
    /// `(n, error)` for every size where the method found no estimate.
    pub failures: Vec<(usize, String)>,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub estimates: Vec<CriticalEstimate>,
    pub summaries: Vec<MethodSummary>,
}

impl ScalingResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn exponent(&self, method: Method) -> Option<f64> {
        self.summary(method)?.fit.map(|f| f.exponent)
    }

    pub fn has_failures(&self) -> bool {
        self.summaries.iter().any(|s| !s.failures.is_empty() || s.fit.is_none())
    }
}

/// Estimate on the coarse grid, then again on a grid refined around it.
fn two_stage<F>(cache: &mut GridCache, coarse: &[f64], max: f64, cfg: &ScalingConfig, replicate: u64, estimate: F) -> Result<f64>
where
    F: Fn(&SweepGrid) -> Result<f64>,
{
    let first = estimate(&cache.grid(coarse, replicate)?)?;
    if cfg.refine_factor < 2 {
        return Ok(first);
    }
    let fine = refine_grid(coarse, first, cfg.refine_factor, max);
    Ok(estimate(&cache.grid(&fine, replicate)?).unwrap_or(first))
}

fn manual_estimate(method: Method, grid: &SweepGrid, cfg: &ScalingConfig) -> Result<f64> {
    match method {
        Method::Human => human_method(grid, &cfg.peak),
        Method::Moi => moi_method(grid),
        Method::Ipr => ipr_method(grid, cfg.ipr_refine),
        _ => unreachable!("not a manual method"),
    }
}

fn classifier_estimate(model: &Classifier, grid: &SweepGrid) -> Result<f64> {
    confusion_curve(model, &grid.records)?.critical_value(model.rule())
}

/// Runs every requested method at every system size.
///
/// Each size gets its own sweep cache, so the methods see identical walks.
/// Classifiers are trained once per size on that size's walks. A method that
/// fails on more than a quarter of the sizes is marked unreliable; its fit,
/// and every other method's, still uses whatever sizes succeeded.
pub fn scaling_sweep(cfg: &ScalingConfig, progress: &mut dyn FnMut(&str)) -> Result<ScalingResult> {
    cfg.validate()?;
    let max = cfg.kind.magnitude_max(cfg.theta0);
    let coarse = coarse_grid(max, cfg.grid_points);
    let mut estimates = Vec::new();
    let mut failures: Vec<Vec<(usize, String)>> = vec![Vec::new(); cfg.methods.len()];

    for &n in &cfg.n_values {
        let base = WalkConfig::new(cfg.n_max, cfg.theta0, derive_seed(cfg.seed, &[n as u64])).with_steps(n);
        let mut cache = GridCache::new(base, cfg.kind, cfg.ipr_variant);
        for (mi, &method) in cfg.methods.iter().enumerate() {
            progress(&format!("n = {n}: {method}"));
            let outcome = method_at_size(method, n, &base, &mut cache, &coarse, max, cfg);
            match outcome {
                Ok(est) => estimates.push(est),
                Err(e) => failures[mi].push((n, e.to_string())),
            }
        }
    }

    let summaries = cfg
        .methods
        .iter()
        .zip(failures)
        .map(|(&method, failures)| {
            let points: Vec<(f64, f64)> =
                estimates.iter().filter(|e| e.method == method).map(|e| (e.n as f64, e.critical_value)).collect();
            let reliable = (failures.len() as f64) <= MAX_FAILURE_SHARE * cfg.n_values.len() as f64;
            MethodSummary { method, fit: power_law_fit(&points).ok(), failures, reliable }
        })
        .collect();
    Ok(ScalingResult { estimates, summaries })
}

fn method_at_size(
    method: Method,
    n: usize,
    base: &WalkConfig,
    cache: &mut GridCache,
    coarse: &[f64],
    max: f64,
    cfg: &ScalingConfig,
) -> Result<CriticalEstimate> {
    let mut values = Vec::new();
    let mut first_error = None;
    let mut note = String::new();
    let model = match cfg.training.spec(method) {
        Some(spec) => {
            let width = cfg.training.band_width.unwrap_or_else(|| crate::ml::default_band_width(cfg.kind));
            let bands = TrainingBands::deep(cfg.kind, cfg.theta0, width, cfg.grid_points)?;
            let train_seed = derive_seed(cfg.seed, &[n as u64, method as u64]);
            let samples = generate_training_set(base, cfg.kind, &bands, cfg.training.n_samples, train_seed)?;
            let model = spec.train(&samples, train_seed)?;
            note = format!("holdout_accuracy={:.4}; ", model.holdout_accuracy());
            Some(model)
        }
        None => None,
    };
    for r in 0..cfg.replicates as u64 {
        let result = match &model {
            Some(m) => two_stage(cache, coarse, max, cfg, r, |g| classifier_estimate(m, g)),
            None => two_stage(cache, coarse, max, cfg, r, |g| manual_estimate(method, g, cfg)),
        };
        match result {
            Ok(v) => values.push(v),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let Some(critical_value) = median(&values) else {
        return Err(first_error.unwrap_or(Error::NoTransition));
    };
    Ok(CriticalEstimate {
        method,
        n,
        critical_value,
        diagnostics: format!("{note}replicates={} succeeded={}", cfg.replicates, values.len()),
    })
}
