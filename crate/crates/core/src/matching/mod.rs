//! Assigning detections to ground truths.
//!
//! Two protocols live here. [`match_greedy`] is the evaluation protocol used
//! by AP and LRP: detections claim ground truths in descending score order.
//! [`match_optimal`] solves the assignment problem exactly and is what the
//! metric-space results (DASA, symmetry, triangle inequality) are stated for.

mod greedy;
mod hungarian;
mod optimal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::ids::{ClassId, ImageId};

pub use greedy::{greedy_trace, match_greedy, GreedyTrace, Outcome};
pub use hungarian::{hungarian, Assignment};
pub use optimal::match_optimal;
pub(crate) use optimal::optimal_pairs;

/// A scored, class-labelled box produced by a detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: ImageId,
    pub class_id: ClassId,
    pub bbox: BoundingBox,
    pub score: f64,
}

impl Detection {
    pub fn new(image_id: ImageId, class_id: ClassId, bbox: BoundingBox, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore(score));
        }
        Ok(Self {
            image_id,
            class_id,
            bbox,
            score,
        })
    }
}

/// An annotated box. `ignore` marks crowd regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_id: ImageId,
    pub class_id: ClassId,
    pub bbox: BoundingBox,
    #[serde(default)]
    pub ignore: bool,
}

impl GroundTruth {
    pub fn new(image_id: ImageId, class_id: ClassId, bbox: BoundingBox) -> Self {
        Self {
            image_id,
            class_id,
            bbox,
            ignore: false,
        }
    }

    pub fn ignored(mut self) -> Self {
        self.ignore = true;
        self
    }
}

/// A validated detection paired with the ground truth it claimed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpPair {
    pub det: usize,
    pub gt: usize,
    pub iou: f64,
}

/// Outcome of assigning detections to ground truths at fixed `(s, tau)`.
///
/// Indices refer to the slices passed to the matcher. Detections absorbed by
/// `ignore` ground truths are counted in `n_ignored` and nowhere else.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp_pairs: Vec<TpPair>,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
    pub n_ignored: usize,
}

impl MatchResult {
    /// `|Y_s|` as seen by LRP: true plus false positives.
    pub fn n_detections(&self) -> usize {
        self.n_tp + self.n_fp
    }

    /// `|X|`: non-ignored ground truths.
    pub fn n_ground_truths(&self) -> usize {
        self.n_tp + self.n_fn
    }

    /// `1 - IoU` of each TP pair, in pair order.
    pub fn tp_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.tp_pairs.iter().map(|p| 1.0 - p.iou)
    }
}

pub(crate) fn validate_tau(tau: f64) -> Result<()> {
    if (0.0..1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

pub(crate) fn validate_score_threshold(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidScoreThreshold(s))
    }
}
