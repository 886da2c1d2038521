//! Classical disorder layered on the walk: at every step a fair coin picks
//! between two angles, a uniform draw perturbs the angle, or a biased coin
//! picks the inverse translation.
//!
//! Every walk draws from its own `Xoshiro256PlusPlus` stream seeded with
//! `seed_from_u64(seed)` (SplitMix64 expansion), so results are a pure
//! function of `(config, model, seed)` on every platform and thread count.

use rand::{Rng, RngExt, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{ipr_with, moment_of_inertia, DiagnosticsSeries, IprVariant, ProbabilityDistribution};
use crate::walk::{coin_matrix, initial_state, Direction, WalkConfig, WalkerState};

pub type WalkRng = Xoshiro256PlusPlus;

pub fn walk_rng(seed: u64) -> WalkRng {
    WalkRng::seed_from_u64(seed)
}

/// Mixes a base seed with stream identifiers into an independent seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut mixer = SplitMix64::seed_from_u64(base);
    let mut out = mixer.next_u64();
    for &p in parts {
        mixer = SplitMix64::seed_from_u64(out ^ p.rotate_left(17));
        out = mixer.next_u64();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    None,
    DiscreteAngle,
    ContinuousAngle,
    RandomTranslation,
}

impl ModelKind {
    pub fn with_magnitude(self, magnitude: f64) -> RandomnessModel {
        match self {
            ModelKind::None => RandomnessModel::None,
            ModelKind::DiscreteAngle => RandomnessModel::DiscreteAngle { delta_theta: magnitude },
            ModelKind::ContinuousAngle => RandomnessModel::ContinuousAngle { delta_theta_max: magnitude },
            ModelKind::RandomTranslation => RandomnessModel::RandomTranslation { p_r: magnitude },
        }
    }

    /// Upper end of the meaningful magnitude range: `theta0` for the angle
    /// models and `0.5` for random translation.
    pub fn magnitude_max(self, theta0: f64) -> f64 {
        match self {
            ModelKind::RandomTranslation => 0.5,
            _ => theta0,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, ModelKind::DiscreteAngle | ModelKind::ContinuousAngle)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::None => "none",
            ModelKind::DiscreteAngle => "discrete_angle",
            ModelKind::ContinuousAngle => "continuous_angle",
            ModelKind::RandomTranslation => "random_translation",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RandomnessModel {
    None,
    /// `theta0 +/- delta_theta` with probability 1/2 each.
    DiscreteAngle { delta_theta: f64 },
    /// `theta0 + u`, `u ~ Uniform[0, delta_theta_max)`.
    ContinuousAngle { delta_theta_max: f64 },
    /// Inverse translation with probability `p_r`.
    RandomTranslation { p_r: f64 },
}

impl RandomnessModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            RandomnessModel::None => ModelKind::None,
            RandomnessModel::DiscreteAngle { .. } => ModelKind::DiscreteAngle,
            RandomnessModel::ContinuousAngle { .. } => ModelKind::ContinuousAngle,
            RandomnessModel::RandomTranslation { .. } => ModelKind::RandomTranslation,
        }
    }

    pub fn magnitude(&self) -> f64 {
        match *self {
            RandomnessModel::None => 0.0,
            RandomnessModel::DiscreteAngle { delta_theta } => delta_theta,
            RandomnessModel::ContinuousAngle { delta_theta_max } => delta_theta_max,
            RandomnessModel::RandomTranslation { p_r } => p_r,
        }
    }

    /// True when no step consumes randomness.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, RandomnessModel::None)
    }

    pub fn validate(&self, theta0: f64) -> Result<()> {
        let m = self.magnitude();
        if !m.is_finite() {
            return Err(Error::InvalidConfig(format!("randomness magnitude {m} is not finite")));
        }
        match *self {
            RandomnessModel::None => Ok(()),
            RandomnessModel::DiscreteAngle { delta_theta } if !(0.0..=theta0).contains(&delta_theta) => Err(
                Error::InvalidConfig(format!("delta_theta = {delta_theta} must lie in [0, theta0 = {theta0}]")),
            ),
            RandomnessModel::ContinuousAngle { delta_theta_max } if delta_theta_max < 0.0 => Err(
                Error::InvalidConfig(format!("delta_theta_max = {delta_theta_max} must be non-negative")),
            ),
            RandomnessModel::RandomTranslation { p_r } if !(0.0..=0.5).contains(&p_r) => {
                Err(Error::InvalidConfig(format!("p_r = {p_r} must lie in [0, 0.5]")))
            }
            _ => Ok(()),
        }
    }

    /// Like [`validate`](Self::validate) but admits `p_r` up to 1, for
    /// checking the parity symmetry between `p_r` and `1 - p_r`.
    fn validate_extended(&self, theta0: f64) -> Result<()> {
        match *self {
            RandomnessModel::RandomTranslation { p_r } if (0.0..=1.0).contains(&p_r) => Ok(()),
            _ => self.validate(theta0),
        }
    }
}

/// The classical choice made at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepChoice {
    pub theta_used: f64,
    pub direction_used: Direction,
}

pub fn draw_choice<R: Rng + ?Sized>(model: &RandomnessModel, theta0: f64, rng: &mut R) -> StepChoice {
    let forward = |theta_used| StepChoice { theta_used, direction_used: Direction::Forward };
    match *model {
        RandomnessModel::None => forward(theta0),
        RandomnessModel::DiscreteAngle { delta_theta } => {
            if rng.random::<f64>() < 0.5 {
                forward(theta0 + delta_theta)
            } else {
                forward(theta0 - delta_theta)
            }
        }
        RandomnessModel::ContinuousAngle { delta_theta_max } => forward(theta0 + rng.random::<f64>() * delta_theta_max),
        RandomnessModel::RandomTranslation { p_r } => {
            let direction_used = if rng.random::<f64>() < p_r { Direction::Inverse } else { Direction::Forward };
            StepChoice { theta_used: theta0, direction_used }
        }
    }
}

/// Runs `config.n_t` steps from the initial state, calling `on_step(t, state, choice)`
/// after each step `t = 1 ..= n_t`. Returns the final state.
pub fn evolve_with<F>(config: &WalkConfig, model: &RandomnessModel, mut on_step: F) -> Result<WalkerState>
where
    F: FnMut(usize, &WalkerState, StepChoice) -> Result<()>,
{
    config.validate()?;
    model.validate_extended(config.theta0)?;
    let mut rng = walk_rng(config.seed);
    let mut state = initial_state(config.n_max)?;
    for t in 1..=config.n_t {
        let choice = draw_choice(model, config.theta0, &mut rng);
        let coin = coin_matrix(config.coin(choice.theta_used))?;
        state.step_in_place(&coin, choice.direction_used)?;
        on_step(t, &state, choice)?;
    }
    Ok(state)
}

/// Full history of one walk (or the mean of an ensemble).
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRecord {
    pub config: WalkConfig,
    pub model: RandomnessModel,
    /// One choice per step; empty for ensemble means over several realizations.
    pub choices: Vec<StepChoice>,
    /// `distributions[t - 1]` is `P(x, t)`.
    pub distributions: Vec<ProbabilityDistribution>,
    pub diagnostics: DiagnosticsSeries,
    /// Final state of the (first) realization.
    pub final_state: WalkerState,
}

impl EvolutionRecord {
    pub fn final_distribution(&self) -> &ProbabilityDistribution {
        self.distributions.last().expect("a record holds at least one step")
    }
}

pub fn evolve(config: &WalkConfig, model: &RandomnessModel) -> Result<EvolutionRecord> {
    evolve_variant(config, model, IprVariant::PlusComponent)
}

pub fn evolve_variant(config: &WalkConfig, model: &RandomnessModel, variant: IprVariant) -> Result<EvolutionRecord> {
    let mut choices = Vec::with_capacity(config.n_t);
    let mut distributions = Vec::with_capacity(config.n_t);
    let mut diagnostics = DiagnosticsSeries::default();
    let final_state = evolve_with(config, model, |t, state, choice| {
        let dist = ProbabilityDistribution::from_state(state, t);
        diagnostics.moi.push(moment_of_inertia(&dist, config.n_max));
        diagnostics.ipr.push(ipr_with(state, variant)?);
        distributions.push(dist);
        choices.push(choice);
        Ok(())
    })?;
    Ok(EvolutionRecord { config: *config, model: *model, choices, distributions, diagnostics, final_state })
}

/// End-of-walk observables without the per-step history.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalSnapshot {
    pub distribution: ProbabilityDistribution,
    pub moi: f64,
    pub ipr: f64,
}

pub fn evolve_final(config: &WalkConfig, model: &RandomnessModel, variant: IprVariant) -> Result<FinalSnapshot> {
    let state = evolve_with(config, model, |_, _, _| Ok(()))?;
    let distribution = ProbabilityDistribution::from_state(&state, config.n_t);
    let moi = moment_of_inertia(&distribution, config.n_max);
    let ipr = ipr_with(&state, variant)?;
    Ok(FinalSnapshot { distribution, moi, ipr })
}

/// Realizations folded per batch; bounds memory while keeping the sum order fixed.
const ENSEMBLE_BATCH: usize = 64;

/// Mean over realizations with seeds `seed, seed + 1, ...`.
///
/// Distributions, MoI and IPR are averaged per step. Realizations run in
/// parallel and are summed in index order, so the result does not depend
/// on the thread count.
pub fn ensemble_mean(config: &WalkConfig, model: &RandomnessModel, n_realizations: usize) -> Result<EvolutionRecord> {
    ensemble_mean_variant(config, model, n_realizations, IprVariant::PlusComponent)
}

pub fn ensemble_mean_variant(
    config: &WalkConfig,
    model: &RandomnessModel,
    n_realizations: usize,
    variant: IprVariant,
) -> Result<EvolutionRecord> {
    if n_realizations < 1 {
        return Err(Error::InvalidConfig("n_realizations must be at least 1".into()));
    }
    let first = evolve_variant(config, model, variant)?;
    if n_realizations == 1 {
        return Ok(first);
    }
    if model.is_deterministic() {
        return Ok(EvolutionRecord { choices: Vec::new(), ..first });
    }

    let mut sums: Vec<Vec<f64>> = first.distributions.iter().map(|d| d.values.clone()).collect();
    let mut moi = first.diagnostics.moi.clone();
    let mut ipr = first.diagnostics.ipr.clone();

    let mut next = 1;
    while next < n_realizations {
        let end = (next + ENSEMBLE_BATCH).min(n_realizations);
        let batch: Vec<EvolutionRecord> = (next..end)
            .into_par_iter()
            .map(|i| evolve_variant(&config.with_seed(config.seed.wrapping_add(i as u64)), model, variant))
            .collect::<Result<_>>()?;
        for rec in &batch {
            for (acc, d) in sums.iter_mut().zip(&rec.distributions) {
                for (a, v) in acc.iter_mut().zip(&d.values) {
                    *a += v;
                }
            }
            for (a, v) in moi.iter_mut().zip(&rec.diagnostics.moi) {
                *a += v;
            }
            for (a, v) in ipr.iter_mut().zip(&rec.diagnostics.ipr) {
                *a += v;
            }
        }
        next = end;
    }

    let scale = 1.0 / n_realizations as f64;
    let distributions = sums
        .into_iter()
        .enumerate()
        .map(|(i, values)| ProbabilityDistribution {
            values: values.into_iter().map(|v| v * scale).collect(),
            time: i + 1,
        })
        .collect();
    Ok(EvolutionRecord {
        config: *config,
        model: *model,
        choices: Vec::new(),
        distributions,
        diagnostics: DiagnosticsSeries {
            moi: moi.into_iter().map(|v| v * scale).collect(),
            ipr: ipr.into_iter().map(|v| v * scale).collect(),
        },
        final_state: first.final_state,
    })
}
