//! Experiment configuration, read from TOML. Every section and key is
//! optional; unknown keys are rejected.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qwloc_core::detect::{coarse_grid, Method};
use qwloc_core::ml::{default_band_width, MlpParams, SvmParams, TrainingBands};
use qwloc_core::observables::{IprVariant, PeakConfig};
use qwloc_core::scaling::{ScalingConfig, TrainingConfig};
use qwloc_core::{ModelKind, WalkConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub walk: WalkSection,
    pub randomness: RandomnessSection,
    pub peaks: PeakConfig,
    pub simulate: SimulateSection,
    pub sweep: SweepSection,
    pub ml: MlSection,
    pub scaling: ScalingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSection {
    /// Lattice half-width; sites run from `-n_max` to `n_max`.
    pub n_max: usize,
    /// Evolution steps.
    pub n_t: usize,
    pub theta0: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub ipr_variant: IprVariant,
}

impl Default for WalkSection {
    fn default() -> Self {
        Self { n_max: 490, n_t: 400, theta0: PI / 6.0, phi1: FRAC_PI_2, phi2: FRAC_PI_2, ipr_variant: IprVariant::PlusComponent }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomnessSection {
    pub kind: ModelKind,
    /// Delta theta, the maximal continuous shift, or the reversal probability.
    pub magnitude: f64,
    /// Realizations averaged by `simulate`.
    pub realizations: usize,
}

impl Default for RandomnessSection {
    fn default() -> Self {
        Self { kind: ModelKind::DiscreteAngle, magnitude: 0.0, realizations: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Times plotted as P(x) panels; the final time when empty.
    pub snapshot_times: Vec<usize>,
    /// Stride between times written to distribution.csv; the final time is always written.
    pub record_every: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { snapshot_times: Vec::new(), record_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Explicit ascending grid; `grid_points` evenly spaced values otherwise.
    pub params: Vec<f64>,
    pub grid_points: usize,
    pub refine_factor: usize,
    pub ipr_refine: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { params: Vec::new(), grid_points: 50, refine_factor: 5, ipr_refine: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[default]
    Svm,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct GridSearchSection {
    /// Candidate hidden-layer lists; the search is off when empty.
    pub hidden_layers: Vec<Vec<usize>>,
    pub l2_alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlSection {
    pub classifier: ClassifierKind,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delocalized_band: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localized_band: Option<[f64; 2]>,
    /// Model read by `ml scan`; `<out>/model.json` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_path: Option<String>,
    pub sample_sizes: Vec<usize>,
    pub repetitions: usize,
    pub regions: Vec<u8>,
    pub svm: SvmParams,
    pub mlp: MlpParams,
    pub grid_search: GridSearchSection,
}

impl Default for MlSection {
    fn default() -> Self {
        Self {
            classifier: ClassifierKind::Svm,
            n_samples: 1800,
            band_width: None,
            delocalized_band: None,
            localized_band: None,
            model_path: None,
            sample_sizes: vec![200, 1800],
            repetitions: 10,
            regions: vec![1, 2, 3],
            svm: SvmParams::default(),
            mlp: MlpParams::default(),
            grid_search: GridSearchSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSection {
    pub kinds: Vec<ModelKind>,
    pub n_values: Vec<usize>,
    pub methods: Vec<Method>,
    /// Independent sweeps per size; the median estimate is kept.
    pub replicates: usize,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            kinds: vec![ModelKind::DiscreteAngle],
            n_values: vec![50, 100, 150, 210, 300, 400],
            methods: Method::ALL.to_vec(),
            replicates: 5,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            walk: WalkSection::default(),
            randomness: RandomnessSection::default(),
            peaks: PeakConfig::default(),
            simulate: SimulateSection::default(),
            sweep: SweepSection::default(),
            ml: MlSection::default(),
            scaling: ScalingSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            n_max: self.walk.n_max,
            n_t: self.walk.n_t,
            theta0: self.walk.theta0,
            coin_phis: (self.walk.phi1, self.walk.phi2),
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if let Err(e) = self.walk_config().validate() {
            return bad("walk", e.to_string());
        }
        if let Err(e) = self.randomness.kind.with_magnitude(self.randomness.magnitude).validate(self.walk.theta0) {
            return bad("randomness.magnitude", e.to_string());
        }
        if self.randomness.realizations == 0 {
            return bad("randomness.realizations", "must be at least 1".into());
        }
        if self.simulate.record_every == 0 {
            return bad("simulate.record_every", "must be at least 1".into());
        }
        if let Some(&t) = self.simulate.snapshot_times.iter().find(|&&t| t == 0 || t > self.walk.n_t) {
            return bad("simulate.snapshot_times", format!("{t} is outside 1..={}", self.walk.n_t));
        }
        if self.sweep.params.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sweep.params", "must be strictly ascending".into());
        }
        let max = self.randomness.kind.magnitude_max(self.walk.theta0);
        if let Some(p) = self.sweep.params.iter().find(|&&p| !(p >= 0.0 && p <= max)) {
            return bad("sweep.params", format!("{p} is outside [0, {max}]"));
        }
        if self.sweep.grid_points < 1 {
            return bad("sweep.grid_points", "must be at least 1".into());
        }
        let p = &self.peaks;
        if !(p.smoothing_fraction >= 0.0 && p.prominence_fraction >= 0.0 && p.central_fraction >= 0.0) {
            return bad("peaks", "fractions must be non-negative".into());
        }
        if self.ml.n_samples < 4 || !self.ml.n_samples.is_multiple_of(2) {
            return bad("ml.n_samples", format!("{} must be even and at least 4", self.ml.n_samples));
        }
        if self.ml.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("ml.sample_sizes", "must be strictly ascending".into());
        }
        if let Some(&r) = self.ml.regions.iter().find(|&&r| !(1..=3).contains(&r)) {
            return bad("ml.regions", format!("{r} is not 1, 2 or 3"));
        }
        if !(0.0..1.0).contains(&self.ml.svm.holdout_fraction) || !(0.0..1.0).contains(&self.ml.mlp.holdout_fraction) {
            return bad("ml", "holdout fractions must lie in [0, 1)".into());
        }
        if self.scaling.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("scaling.n_values", "must be strictly ascending".into());
        }
        if self.scaling.n_values.contains(&0) {
            return bad("scaling.n_values", "sizes must be at least 1".into());
        }
        if self.scaling.replicates == 0 {
            return bad("scaling.replicates", "must be at least 1".into());
        }
        Ok(())
    }

    /// Sweep grid: the explicit list, or evenly spaced values up to the
    /// largest meaningful magnitude.
    pub fn sweep_params(&self) -> Vec<f64> {
        if self.sweep.params.is_empty() {
            coarse_grid(self.randomness.kind.magnitude_max(self.walk.theta0), self.sweep.grid_points)
        } else {
            self.sweep.params.clone()
        }
    }

    pub fn training_bands(&self) -> CliResult<TrainingBands> {
        let kind = self.randomness.kind;
        let width = self.ml.band_width.unwrap_or_else(|| default_band_width(kind));
        let mut bands = TrainingBands::deep(kind, self.walk.theta0, width, self.sweep.grid_points)?;
        if let Some([a, b]) = self.ml.delocalized_band {
            bands.delocalized = (a, b);
        }
        if let Some([a, b]) = self.ml.localized_band {
            bands.localized = (a, b);
        }
        bands.validate()?;
        Ok(bands)
    }

    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            n_samples: self.ml.n_samples,
            band_width: self.ml.band_width,
            svm: self.ml.svm,
            mlp: self.ml.mlp.clone(),
        }
    }

    pub fn scaling_config(&self, kind: ModelKind) -> ScalingConfig {
        let mut cfg = ScalingConfig::new(kind, self.walk.theta0, self.walk.n_max, self.scaling.n_values.clone(), self.seed);
        cfg.methods = self.scaling.methods.clone();
        cfg.grid_points = self.sweep.grid_points;
        cfg.refine_factor = self.sweep.refine_factor;
        cfg.replicates = self.scaling.replicates;
        cfg.peak = self.peaks;
        cfg.ipr_variant = self.walk.ipr_variant;
        cfg.ipr_refine = self.sweep.ipr_refine;
        cfg.training = self.training();
        cfg
    }
}
