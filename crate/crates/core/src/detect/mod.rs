//! Critical randomness from parameter sweeps, and power-law scaling of the
//! critical value with system size.

mod fit;
mod grid;
mod manual;

use serde::{Deserialize, Serialize};

pub use fit::{fit_line, moi_kink, power_law_fit, KinkFit, LineFit, PowerLawFit, KINK_MIN_IMPROVEMENT, KINK_MIN_POINTS};
pub use grid::{coarse_grid, point_seed, refine_grid, sweep_record, GridCache, SweepGrid, SweepRecord};
pub use manual::{human_from_labels, ipr_max};

use crate::error::Result;
use crate::observables::PeakConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Human,
    Moi,
    Ipr,
    Svm,
    Mlp,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Human, Method::Moi, Method::Ipr, Method::Svm, Method::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Human => "human",
            Method::Moi => "moi",
            Method::Ipr => "ipr",
            Method::Svm => "svm",
            Method::Mlp => "mlp",
        }
    }

    pub fn is_manual(self) -> bool {
        matches!(self, Method::Human | Method::Moi | Method::Ipr)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One method's critical value at one system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub method: Method,
    /// System size; the number of evolution steps.
    pub n: usize,
    pub critical_value: f64,
    pub diagnostics: String,
}

/// Critical value from the peak structure of every final distribution.
pub fn human_method(grid: &SweepGrid, cfg: &PeakConfig) -> Result<f64> {
    human_from_labels(&grid.param_values, &grid.labels(cfg))
}

/// Kink of final MoI versus randomness.
pub fn moi_method(grid: &SweepGrid) -> Result<f64> {
    moi_kink(&grid.moi_points()).map(|k| k.breakpoint)
}

/// Maximum of final IPR versus randomness.
pub fn ipr_method(grid: &SweepGrid, refine: bool) -> Result<f64> {
    ipr_max(&grid.ipr_points(), refine)
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}
