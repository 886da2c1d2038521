//! Parameter sweeps at fixed system size: grid construction, the per-point
//! walk records, and a cache so that coarse and refined grids share their
//! common points.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{classify_peaks_with, IprVariant, PeakConfig, PeakLabel, ProbabilityDistribution};
use crate::randomness::{derive_seed, evolve_final, ModelKind};
use crate::walk::WalkConfig;

/// `points` evenly spaced magnitudes `max * k / points`, `k = 1 ..= points`.
pub fn coarse_grid(max: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|k| max * k as f64 / points as f64).collect()
}

/// Adds `factor`-times finer points within one coarse spacing of `center`,
/// clipped to `(0, max]`, and returns the merged ascending grid.
pub fn refine_grid(coarse: &[f64], center: f64, factor: usize, max: f64) -> Vec<f64> {
    if coarse.len() < 2 || factor < 2 {
        return coarse.to_vec();
    }
    let spacing = coarse[1] - coarse[0];
    let step = spacing / factor as f64;
    let mut out: Vec<f64> = coarse.to_vec();
    let f = factor as i64;
    for j in -f..=f {
        let p = center + step * j as f64;
        if p > 0.0 && p <= max * (1.0 + 1e-12) {
            out.push(p.min(max));
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * spacing);
    out
}

/// End-of-walk observables at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub param: f64,
    pub seed: u64,
    pub distribution: ProbabilityDistribution,
    pub moi: f64,
    pub ipr: f64,
}

/// One walk per parameter value at fixed `(n_max, n_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub n_max: usize,
    pub n_t: usize,
    pub model_kind: ModelKind,
    pub param_values: Vec<f64>,
    pub records: Vec<SweepRecord>,
}

impl SweepGrid {
    pub fn new(n_max: usize, n_t: usize, model_kind: ModelKind, records: Vec<SweepRecord>) -> Result<Self> {
        let param_values: Vec<f64> = records.iter().map(|r| r.param).collect();
        if param_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("sweep parameters must be strictly ascending".into()));
        }
        Ok(Self { n_max, n_t, model_kind, param_values, records })
    }

    /// Runs one walk per parameter in parallel; realization `replicate` of
    /// point `param` uses a seed derived from `(base.seed, replicate, param)`.
    pub fn generate(
        base: &WalkConfig,
        kind: ModelKind,
        params: &[f64],
        replicate: u64,
        variant: IprVariant,
    ) -> Result<Self> {
        let records = params
            .par_iter()
            .map(|&p| sweep_record(base, kind, p, replicate, variant))
            .collect::<Result<Vec<_>>>()?;
        Self::new(base.n_max, base.n_t, kind, records)
    }

    pub fn moi_points(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.param, r.moi)).collect()
    }

    pub fn ipr_points(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.param, r.ipr)).collect()
    }

    pub fn labels(&self, cfg: &PeakConfig) -> Vec<PeakLabel> {
        self.records.iter().map(|r| classify_peaks_with(&r.distribution, cfg).label).collect()
    }
}

pub fn point_seed(base_seed: u64, replicate: u64, param: f64) -> u64 {
    derive_seed(base_seed, &[replicate, param.to_bits()])
}

pub fn sweep_record(
    base: &WalkConfig,
    kind: ModelKind,
    param: f64,
    replicate: u64,
    variant: IprVariant,
) -> Result<SweepRecord> {
    let seed = point_seed(base.seed, replicate, param);
    let snap = evolve_final(&base.with_seed(seed), &kind.with_magnitude(param), variant)?;
    Ok(SweepRecord { param, seed, distribution: snap.distribution, moi: snap.moi, ipr: snap.ipr })
}

/// Memoized sweep records for one walk configuration and model.
pub struct GridCache {
    base: WalkConfig,
    kind: ModelKind,
    variant: IprVariant,
    records: BTreeMap<(u64, u64), SweepRecord>,
}

impl GridCache {
    pub fn new(base: WalkConfig, kind: ModelKind, variant: IprVariant) -> Self {
        Self { base, kind, variant, records: BTreeMap::new() }
    }

    pub fn base(&self) -> &WalkConfig {
        &self.base
    }

    /// Sweep grid for `params`, computing only the points not seen before.
    pub fn grid(&mut self, params: &[f64], replicate: u64) -> Result<SweepGrid> {
        let missing: Vec<f64> = params
            .iter()
            .copied()
            .filter(|p| !self.records.contains_key(&(replicate, p.to_bits())))
            .collect();
        let (base, kind, variant) = (self.base, self.kind, self.variant);
        let fresh = missing
            .par_iter()
            .map(|&p| sweep_record(&base, kind, p, replicate, variant))
            .collect::<Result<Vec<_>>>()?;
        for rec in fresh {
            self.records.insert((replicate, rec.param.to_bits()), rec);
        }
        let records = params.iter().map(|p| self.records[&(replicate, p.to_bits())].clone()).collect();
        SweepGrid::new(self.base.n_max, self.base.n_t, self.kind, records)
    }
}
