//! Critical-value estimators that read a sweep the way a person would:
//! the IPR maximum and the band of flat or three-peak distributions.

use crate::error::{Error, Result};
use crate::observables::PeakLabel;

/// Parameter at the maximum of an `(param, IPR)` curve.
///
/// A plateau of equal maxima reports its midpoint. With `refine`, a parabola
/// through the maximum and its two neighbours moves the estimate to its
/// vertex, never further than one grid spacing.
pub fn ipr_max(points: &[(f64, f64)], refine: bool) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: points.len() });
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let top = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);

    // the widest run of consecutive maxima, leftmost on ties
    let (mut start, mut len) = (0, 0);
    let mut i = 0;
    while i < pts.len() {
        if pts[i].1 == top {
            let mut j = i;
            while j + 1 < pts.len() && pts[j + 1].1 == top {
                j += 1;
            }
            if j - i + 1 > len {
                start = i;
                len = j - i + 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let end = start + len - 1;
    if start == 0 || end == pts.len() - 1 {
        let at = if start == 0 { pts[0].0 } else { pts[end].0 };
        return Err(Error::BoundaryMaximum { param: at });
    }
    if len > 1 {
        return Ok(0.5 * (pts[start].0 + pts[end].0));
    }
    let k = start;
    if !refine {
        return Ok(pts[k].0);
    }
    Ok(parabola_vertex(pts[k - 1], pts[k], pts[k + 1]).clamp(pts[k - 1].0, pts[k + 1].0))
}

/// Abscissa of the vertex of the parabola through three points.
fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature >= 0.0 {
        return x1;
    }
    // slope of the parabola is d01 + curvature * (2x - x0 - x1)
    0.5 * (x0 + x1) - d01 / (2.0 * curvature)
}

/// Critical parameter from peak labels ordered by increasing randomness.
///
/// A clean sweep reads `TwoPeak ... FlatOrThreePeak ... SinglePeak`; the
/// estimate is the midpoint of the flat/three-peak band, or the midpoint
/// between the last two-peak and first single-peak parameters when the band
/// is empty. Noisy sweeps are first fitted to that ordered pattern by the
/// assignment with the fewest disagreeing labels; when several assignments
/// tie, their estimates are averaged.
pub fn human_from_labels(params: &[f64], labels: &[PeakLabel]) -> Result<f64> {
    if params.len() != labels.len() {
        return Err(Error::InvalidParameter("params and labels differ in length".into()));
    }
    let n = labels.len();
    if !labels.contains(&PeakLabel::TwoPeak) || !labels.contains(&PeakLabel::SinglePeak) || n < 2 {
        return Err(Error::RegimeCoverage(
            "the sweep must contain both two-peak and single-peak distributions".into(),
        ));
    }

    // prefix counts of each label
    let count = |label: PeakLabel| {
        let mut c = vec![0usize; n + 1];
        for (i, l) in labels.iter().enumerate() {
            c[i + 1] = c[i] + usize::from(*l == label);
        }
        c
    };
    let (two, flat, single) = (count(PeakLabel::TwoPeak), count(PeakLabel::FlatOrThreePeak), count(PeakLabel::SinglePeak));

    // two-peak on [0, i), flat on [i, j), single-peak on [j, n); both ends non-empty
    let mut best = usize::MAX;
    let mut estimates = Vec::new();
    for i in 1..n {
        for j in i..n {
            let agree = two[i] + (flat[j] - flat[i]) + (single[n] - single[j]);
            let cost = n - agree;
            let estimate = if j > i { 0.5 * (params[i] + params[j - 1]) } else { 0.5 * (params[i - 1] + params[i]) };
            if cost < best {
                best = cost;
                estimates.clear();
            }
            if cost == best {
                estimates.push(estimate);
            }
        }
    }
    Ok(estimates.iter().sum::<f64>() / estimates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use PeakLabel::*;

    #[test]
    fn ipr_interior_maximum() {
        let pts = [(0.1, 1.0), (0.2, 3.0), (0.3, 9.0), (0.4, 3.0), (0.5, 1.0)];
        assert_eq!(ipr_max(&pts, false).unwrap(), 0.3);
        assert!((ipr_max(&pts, true).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ipr_monotone_is_boundary_error() {
        let pts = [(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)];
        assert!(matches!(ipr_max(&pts, false), Err(Error::BoundaryMaximum { .. })));
        let pts = [(0.1, 3.0), (0.2, 2.0), (0.3, 1.0)];
        assert!(matches!(ipr_max(&pts, false), Err(Error::BoundaryMaximum { .. })));
    }

    #[test]
    fn ipr_plateau_midpoint() {
        let pts = [(0.1, 1.0), (0.2, 5.0), (0.3, 5.0), (0.4, 5.0), (0.5, 2.0)];
        assert!((ipr_max(&pts, true).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn ipr_refinement_moves_toward_heavier_side() {
        let pts = [(0.1, 1.0), (0.2, 8.0), (0.3, 9.0), (0.4, 3.0), (0.5, 1.0)];
        let r = ipr_max(&pts, true).unwrap();
        assert!(r < 0.3 && r > 0.2);
    }

    #[test]
    fn human_single_critical_cell() {
        let v = human_from_labels(&[0.1, 0.2, 0.3, 0.4], &[TwoPeak, TwoPeak, FlatOrThreePeak, SinglePeak]).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
    }

    #[test]
    fn human_midpoint_without_band() {
        let v = human_from_labels(&[0.1, 0.2], &[TwoPeak, SinglePeak]).unwrap();
        assert!((v - 0.15).abs() < 1e-15);
    }

    #[test]
    fn human_needs_both_regimes() {
        assert!(matches!(
            human_from_labels(&[0.1, 0.2, 0.3], &[SinglePeak; 3]),
            Err(Error::RegimeCoverage(_))
        ));
        assert!(matches!(
            human_from_labels(&[0.1, 0.2], &[TwoPeak, FlatOrThreePeak]),
            Err(Error::RegimeCoverage(_))
        ));
    }

    #[test]
    fn human_wide_band() {
        let labels = [TwoPeak, FlatOrThreePeak, FlatOrThreePeak, FlatOrThreePeak, SinglePeak];
        let v = human_from_labels(&[1.0, 2.0, 3.0, 4.0, 5.0], &labels).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
    }

    #[test]
    fn human_tolerates_an_outlier() {
        let labels = [TwoPeak, TwoPeak, SinglePeak, TwoPeak, FlatOrThreePeak, SinglePeak, SinglePeak];
        let params = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let v = human_from_labels(&params, &labels).unwrap();
        assert!(v > 1.0 && v < 7.0);
        assert!((v - 5.0).abs() <= 1.0, "{v}");
    }
}
