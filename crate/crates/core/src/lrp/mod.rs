//! The LRP error and its components.
//!
//! For a matching of `Y_s` against `X` at IoU threshold `tau`, LRP averages a
//! per-box penalty over the `Z = N_TP + N_FP + N_FN` boxes that take part:
//! each TP costs `(1 - IoU) / (1 - tau)`, each FP and each FN costs 1.
//!
//! The same number can be written as a weighted sum of a localization, an FP
//! and an FN component. The components are reported separately but the total
//! is always computed from the compact per-box form, which has no
//! zero-denominator cases once `Z >= 1`.

mod dasa;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::matching::{match_optimal, validate_tau, MatchResult};

pub use dasa::{dasa, DasaParams};

/// Total LRP with its components, counts and weights.
///
/// A component is `None` when its denominator is zero: `loc` when there are
/// no TPs, `fp` when `Y_s` is empty, `fn_` when `X` is empty. `None` is not
/// the same as `Some(0.0)`: no detections at all is different from no FPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrpBreakdown {
    pub total: f64,
    pub loc: Option<f64>,
    pub fp: Option<f64>,
    #[serde(rename = "fn")]
    pub fn_: Option<f64>,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
    pub z: usize,
    pub tau: f64,
    pub w_iou: f64,
    pub w_fp: f64,
    pub w_fn: f64,
}

impl LrpBreakdown {
    /// Builds the breakdown from counts and the summed TP distances `sum(1 - IoU)`.
    pub(crate) fn from_parts(
        n_tp: usize,
        n_fp: usize,
        n_fn: usize,
        loc_sum: f64,
        tau: f64,
    ) -> Result<Self> {
        let z = n_tp + n_fp + n_fn;
        if z == 0 {
            return Err(Error::UndefinedLrp);
        }
        let slack = 1.0 - tau;
        let n_det = n_tp + n_fp;
        let n_gt = n_tp + n_fn;
        let total = ((loc_sum / slack + n_fp as f64 + n_fn as f64) / z as f64).clamp(0.0, 1.0);
        Ok(Self {
            total,
            loc: (n_tp > 0).then(|| loc_sum / n_tp as f64),
            fp: (n_det > 0).then(|| n_fp as f64 / n_det as f64),
            fn_: (n_gt > 0).then(|| n_fn as f64 / n_gt as f64),
            n_tp,
            n_fp,
            n_fn,
            z,
            tau,
            w_iou: n_tp as f64 / slack,
            w_fp: n_det as f64,
            w_fn: n_gt as f64,
        })
    }

    /// The weighted-component form of the total; an absent component has weight zero.
    pub fn weighted_total(&self) -> f64 {
        let term = |w: f64, c: Option<f64>| c.map_or(0.0, |c| w * c);
        (term(self.w_iou, self.loc) + term(self.w_fp, self.fp) + term(self.w_fn, self.fn_))
            / self.z as f64
    }

    /// Average IoU of the true positives, `1 - loc`.
    pub fn mean_tp_iou(&self) -> Option<f64> {
        self.loc.map(|l| 1.0 - l)
    }

    pub fn precision(&self) -> Option<f64> {
        self.fp.map(|f| 1.0 - f)
    }

    pub fn recall(&self) -> Option<f64> {
        self.fn_.map(|f| 1.0 - f)
    }
}

fn check_counts(m: &MatchResult, n_gt: usize, n_det: usize) -> Result<()> {
    if m.n_tp != m.tp_pairs.len() || m.n_tp + m.n_fn != n_gt || m.n_tp + m.n_fp != n_det {
        return Err(Error::InconsistentCounts {
            n_tp: m.n_tp,
            n_fp: m.n_fp,
            n_fn: m.n_fn,
            n_gt,
            n_det,
        });
    }
    Ok(())
}

/// LRP with components for a matching of `n_det = |Y_s|` detections against
/// `n_gt = |X|` non-ignored ground truths.
pub fn lrp_components(m: &MatchResult, n_gt: usize, n_det: usize, tau: f64) -> Result<LrpBreakdown> {
    validate_tau(tau)?;
    check_counts(m, n_gt, n_det)?;
    LrpBreakdown::from_parts(m.n_tp, m.n_fp, m.n_fn, m.tp_distances().sum(), tau)
}

/// The total LRP error alone.
pub fn lrp_total(m: &MatchResult, n_gt: usize, n_det: usize, tau: f64) -> Result<f64> {
    lrp_components(m, n_gt, n_det, tau).map(|b| b.total)
}

/// LRP between two box sets under optimal assignment.
///
/// This is the metric form of LRP: symmetric in its arguments, with the FP
/// and FN components trading places when they are swapped.
pub fn lrp_between_sets(xs: &[BoundingBox], ys: &[BoundingBox], tau: f64) -> Result<LrpBreakdown> {
    let m = match_optimal(xs, ys, tau)?;
    lrp_components(&m, xs.len(), ys.len(), tau)
}
