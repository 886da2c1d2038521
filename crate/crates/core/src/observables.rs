//! Diagnostics of a walk: position distribution, moment of inertia,
//! inverse participation ratio and a mechanized version of reading the
//! peak structure of a distribution by eye.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::WalkerState;

/// `P(x) = |plus(x)|^2 + |minus(x)|^2` over `x = -n_max ..= n_max` after `time` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDistribution {
    pub values: Vec<f64>,
    pub time: usize,
}

impl ProbabilityDistribution {
    pub fn from_state(state: &WalkerState, time: usize) -> Self {
        let values = state
            .plus()
            .iter()
            .zip(state.minus())
            .map(|(p, m)| p.norm_sqr() + m.norm_sqr())
            .collect();
        Self { values, time }
    }

    /// Wraps raw values; the length must be odd so the origin is the middle entry.
    pub fn from_values(values: Vec<f64>, time: usize) -> Result<Self> {
        if values.len().is_multiple_of(2) || values.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "distribution length must be odd (got {})",
                values.len()
            )));
        }
        Ok(Self { values, time })
    }

    pub fn n_max(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n_max() as i64;
        (-n..=n).take(self.values.len())
    }

    pub fn at(&self, x: i64) -> f64 {
        let i = x + self.n_max() as i64;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Standard deviation of the position.
    pub fn std_dev(&self) -> f64 {
        let total = self.total();
        let (m1, m2) = self
            .sites()
            .zip(&self.values)
            .fold((0.0, 0.0), |(a, b), (x, p)| (a + x as f64 * p, b + (x * x) as f64 * p));
        let mean = m1 / total;
        (m2 / total - mean * mean).max(0.0).sqrt()
    }

    /// Mirror image `x -> -x`.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values, time: self.time }
    }
}

pub fn probability_distribution(state: &WalkerState) -> ProbabilityDistribution {
    ProbabilityDistribution::from_state(state, 0)
}

/// `sum_{x > 0} P(x) (N - x)^2`; sites with `x <= 0` do not contribute.
pub fn moment_of_inertia(dist: &ProbabilityDistribution, n_max: usize) -> f64 {
    let n = n_max as f64;
    dist.sites()
        .zip(&dist.values)
        .filter(|(x, _)| *x > 0)
        .map(|(x, p)| {
            let d = n - x as f64;
            p * d * d
        })
        .sum()
}

/// Which amplitudes enter the inverse participation ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IprVariant {
    /// `|psi_+(x)|^2` only.
    #[default]
    PlusComponent,
    /// The full `P(x)`.
    TotalProbability,
}

/// `(sum_x |psi_+(x)|^2)^2 / sum_x |psi_+(x)|^4`
pub fn ipr(state: &WalkerState) -> Result<f64> {
    ipr_with(state, IprVariant::PlusComponent)
}

pub fn ipr_with(state: &WalkerState, variant: IprVariant) -> Result<f64> {
    match variant {
        IprVariant::PlusComponent => ipr_of_weights(state.plus().iter().map(|a| a.norm_sqr())),
        IprVariant::TotalProbability => ipr_of_weights(
            state.plus().iter().zip(state.minus()).map(|(p, m)| p.norm_sqr() + m.norm_sqr()),
        ),
    }
}

/// `(sum w)^2 / sum w^2` for non-negative weights.
pub fn ipr_of_weights(weights: impl Iterator<Item = f64>) -> Result<f64> {
    let (s1, s2) = weights.fold((0.0, 0.0), |(a, b), w| (a + w, b + w * w));
    if s2 == 0.0 {
        return Err(Error::DegenerateState);
    }
    Ok(s1 * s1 / s2)
}

/// Per-step diagnostics of one walk, index `t - 1` holding the value after step `t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub moi: Vec<f64>,
    pub ipr: Vec<f64>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.moi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moi.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakLabel {
    /// Two symmetric outer peaks: delocalized.
    TwoPeak,
    /// One dominant central peak: localized.
    SinglePeak,
    /// Flat, or a central peak with outer side peaks: critical.
    FlatOrThreePeak,
}

impl PeakLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PeakLabel::TwoPeak => "two_peak",
            PeakLabel::SinglePeak => "single_peak",
            PeakLabel::FlatOrThreePeak => "flat_or_three_peak",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakStructure {
    pub label: PeakLabel,
    /// Prominent peaks of the smoothed distribution, tallest first.
    pub peak_positions: Vec<i64>,
    pub peak_heights: Vec<f64>,
}

/// Thresholds for [`classify_peaks`]. All fractions are relative, so the
/// result does not depend on how the distribution is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeakConfig {
    /// Moving-average window as a fraction of the step count.
    pub smoothing_fraction: f64,
    pub min_window: usize,
    /// Minimum prominence as a fraction of the global maximum.
    pub prominence_fraction: f64,
    /// Peaks within `central_fraction * t` of the origin count as central.
    pub central_fraction: f64,
    /// Allowed `|x_left + x_right|` of a two-peak pair, relative to `|x|`.
    pub symmetry_tolerance: f64,
    /// Two-peak requires the mean central level to stay below this fraction of the maximum.
    pub valley_fraction: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            smoothing_fraction: 0.08,
            min_window: 3,
            prominence_fraction: 0.2,
            central_fraction: 0.1,
            symmetry_tolerance: 0.2,
            valley_fraction: 0.5,
        }
    }
}

impl PeakConfig {
    /// Odd moving-average width for a walk of `steps` steps.
    pub fn window(&self, steps: usize) -> usize {
        let w = ((steps as f64 * self.smoothing_fraction).floor() as usize).max(self.min_window).max(1);
        w | 1
    }

    pub fn central_radius(&self, steps: usize) -> f64 {
        (steps as f64 * self.central_fraction).max(1.0)
    }
}

/// Smooths a distribution for peak finding.
///
/// A walk that only ever hops by one site occupies sites of a single parity
/// at each time, so every other entry is zero. A `[1, 2, 1] / 4` pass merges
/// neighbours first; the centered moving average of width `window` follows.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let merged: Vec<f64> = (0..n)
        .map(|i| {
            let l = if i > 0 { values[i - 1] } else { 0.0 };
            let r = if i + 1 < n { values[i + 1] } else { 0.0 };
            0.25 * l + 0.5 * values[i] + 0.25 * r
        })
        .collect();
    let half = window / 2;
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + merged[i];
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            // zero padding outside the lattice
            ((prefix[hi] - prefix[lo]) / window as f64).max(0.0)
        })
        .collect()
}

/// Local maxima (plateaus reported at their left-centre) with their prominence.
pub fn find_peaks(values: &[f64]) -> Vec<(usize, f64)> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        let h = values[i];
        let left_lower = i == 0 || values[i - 1] < h;
        let right_lower = j + 1 == n || values[j + 1] < h;
        if h > 0.0 && left_lower && right_lower {
            let centre = (i + j) / 2;
            out.push((centre, h - prominence_base(values, i, j, h)));
        }
        i = j + 1;
    }
    out
}

fn prominence_base(values: &[f64], start: usize, end: usize, h: f64) -> f64 {
    let mut left_min = h;
    for k in (0..start).rev() {
        if values[k] > h {
            break;
        }
        left_min = left_min.min(values[k]);
    }
    let mut right_min = h;
    for &v in &values[end + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    left_min.max(right_min)
}

/// Labels a distribution as two-peak, single-peak or flat/three-peak using
/// the default thresholds.
pub fn classify_peaks(dist: &ProbabilityDistribution) -> PeakStructure {
    classify_peaks_with(dist, &PeakConfig::default())
}

pub fn classify_peaks_with(dist: &ProbabilityDistribution, cfg: &PeakConfig) -> PeakStructure {
    let n = dist.n_max() as i64;
    let steps = if dist.time > 0 { dist.time } else { dist.n_max() };
    let smoothed = smooth(&dist.values, cfg.window(steps));
    let global = smoothed.iter().cloned().fold(0.0, f64::max);

    let mut peaks: Vec<(i64, f64)> = find_peaks(&smoothed)
        .into_iter()
        .filter(|&(_, prom)| prom >= cfg.prominence_fraction * global)
        .map(|(i, _)| (i as i64 - n, smoothed[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.abs().cmp(&b.0.abs())).then(a.0.cmp(&b.0)));

    let structure = |label| PeakStructure {
        label,
        peak_positions: peaks.iter().map(|p| p.0).collect(),
        peak_heights: peaks.iter().map(|p| p.1).collect(),
    };
    let Some(&(top_x, _)) = peaks.first() else {
        return structure(PeakLabel::FlatOrThreePeak);
    };

    let radius = cfg.central_radius(steps);
    let is_central = |x: i64| (x.abs() as f64) <= radius;

    if is_central(top_x) {
        let label = if peaks.iter().any(|&(x, _)| !is_central(x)) {
            PeakLabel::FlatOrThreePeak
        } else {
            PeakLabel::SinglePeak
        };
        return structure(label);
    }

    let has_partner = peaks[1..].iter().any(|&(x, _)| {
        x.signum() == -top_x.signum()
            && !is_central(x)
            && ((x + top_x).abs() as f64) <= cfg.symmetry_tolerance * top_x.abs() as f64
    });
    let (sum, count) = (-n..=n)
        .zip(&smoothed)
        .filter(|(x, _)| is_central(*x))
        .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
    let central_level = if count > 0 { sum / count as f64 } else { 0.0 };

    if has_partner && central_level <= cfg.valley_fraction * global {
        structure(PeakLabel::TwoPeak)
    } else {
        structure(PeakLabel::FlatOrThreePeak)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{initial_state, step, CoinParams, Direction};
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_4;

    fn dist(values: Vec<f64>) -> ProbabilityDistribution {
        ProbabilityDistribution::from_values(values, 0).unwrap()
    }

    fn spike(n: usize, x: i64) -> Vec<f64> {
        let mut v = vec![0.0; 2 * n + 1];
        v[(x + n as i64) as usize] = 1.0;
        v
    }

    #[test]
    fn distribution_of_initial_state() {
        let d = probability_distribution(&initial_state(4).unwrap());
        assert!((d.at(0) - 1.0).abs() < 1e-15);
        assert_eq!(d.values.iter().filter(|&&p| p != 0.0).count(), 1);
    }

    #[test]
    fn distribution_after_quarter_pi_step() {
        let s = step(&initial_state(4).unwrap(), CoinParams::new(FRAC_PI_4), Direction::Forward).unwrap();
        let d = probability_distribution(&s);
        assert!((d.at(1) - 0.5).abs() < 1e-15);
        assert!((d.at(-1) - 0.5).abs() < 1e-15);
        assert!((d.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moi_examples() {
        assert_eq!(moment_of_inertia(&dist(spike(10, 0)), 10), 0.0);
        assert_eq!(moment_of_inertia(&dist(spike(10, 1)), 10), 81.0);
        let mut v = vec![0.0; 7];
        v[4] = 1.0 / 3.0;
        v[5] = 1.0 / 3.0;
        v[6] = 1.0 / 3.0;
        assert!((moment_of_inertia(&dist(v), 3) - 5.0 / 3.0).abs() < 1e-14);
        // negative sites are ignored
        assert_eq!(moment_of_inertia(&dist(spike(10, -3)), 10), 0.0);
    }

    #[test]
    fn moi_decreases_as_mirror_spikes_spread() {
        let n = 20;
        let mut prev = f64::INFINITY;
        for x0 in 1..n as i64 {
            let mut v = vec![0.0; 2 * n + 1];
            v[(n as i64 + x0) as usize] = 0.5;
            v[(n as i64 - x0) as usize] = 0.5;
            let moi = moment_of_inertia(&dist(v), n);
            let expected = 0.5 * ((n as i64 - x0) as f64).powi(2);
            assert!((moi - expected).abs() < 1e-12);
            assert!(moi < prev);
            prev = moi;
        }
    }

    fn state_with_plus(weights: &[f64]) -> WalkerState {
        let plus = weights.iter().map(|w| Complex64::new(w.sqrt(), 0.0)).collect::<Vec<_>>();
        let minus = vec![Complex64::new(0.0, 0.0); weights.len()];
        WalkerState::from_amplitudes(plus, minus).unwrap()
    }

    #[test]
    fn ipr_examples() {
        assert!((ipr(&state_with_plus(&[0.0, 0.3, 0.0])).unwrap() - 1.0).abs() < 1e-15);
        let uniform = state_with_plus(&[0.2; 5]);
        assert!((ipr(&uniform).unwrap() - 5.0).abs() < 1e-12);
        assert!((ipr(&state_with_plus(&[0.5, 0.5, 0.0])).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(ipr(&state_with_plus(&[0.0; 3])), Err(Error::DegenerateState)));
    }

    #[test]
    fn ipr_total_variant_uses_both_components() {
        let s = initial_state(2).unwrap();
        assert_eq!(ipr_with(&s, IprVariant::TotalProbability).unwrap(), 1.0);
        let s = step(&s, CoinParams::new(FRAC_PI_4), Direction::Forward).unwrap();
        // |+> sits on one site, P(x) on two
        assert!((ipr(&s).unwrap() - 1.0).abs() < 1e-12);
        assert!((ipr_with(&s, IprVariant::TotalProbability).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn delta_is_single_peak() {
        let p = classify_peaks(&dist(spike(50, 0)));
        assert_eq!(p.label, PeakLabel::SinglePeak);
        assert_eq!(p.peak_positions, vec![0]);
    }

    #[test]
    fn symmetric_outer_spikes_are_two_peak() {
        let mut v = vec![0.0; 101];
        v[10] = 0.5;
        v[90] = 0.5;
        let p = classify_peaks(&dist(v));
        assert_eq!(p.label, PeakLabel::TwoPeak);
        assert_eq!(p.peak_positions.len(), 2);
    }

    #[test]
    fn three_spikes_are_critical() {
        let mut v = vec![0.0; 101];
        v[10] = 0.25;
        v[50] = 0.5;
        v[90] = 0.25;
        assert_eq!(classify_peaks(&dist(v)).label, PeakLabel::FlatOrThreePeak);
    }

    #[test]
    fn flat_is_critical() {
        assert_eq!(classify_peaks(&dist(vec![1.0 / 101.0; 101])).label, PeakLabel::FlatOrThreePeak);
    }

    #[test]
    fn prominence_of_twin_peaks() {
        let v = [0.0, 1.0, 0.2, 1.0, 0.0];
        let peaks = find_peaks(&v);
        assert_eq!(peaks, vec![(1, 1.0), (3, 1.0)]);
        let v = [0.0, 1.0, 0.6, 0.8, 0.0];
        let peaks = find_peaks(&v);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[1].1 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn smoothing_merges_parity() {
        let v = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let s = smooth(&v, 1);
        assert!((s[2] - 0.5).abs() < 1e-15);
        assert!((s[3] - 0.5).abs() < 1e-15);
    }
}
