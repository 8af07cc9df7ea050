use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{validate_score_threshold, validate_tau, Detection, GroundTruth, MatchResult, TpPair};
use crate::error::{Error, Result};
use crate::ids::ImageId;

/// What happened to one detection during greedy matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Tp { gt: usize, iou: f64 },
    Fp,
    /// Absorbed by an `ignore` ground truth; neither TP nor FP.
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub det: usize,
    pub score: f64,
    pub outcome: Outcome,
}

/// Greedy matching of every detection, recorded in processing order.
///
/// A detection's outcome depends only on detections processed before it, so
/// the matching of `Y_s` is exactly the prefix of steps with `score >= s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub steps: Vec<Step>,
    /// Number of non-ignored ground truths.
    pub n_gt: usize,
}

impl GreedyTrace {
    /// Number of leading steps whose score passes the closed threshold `s`.
    pub fn prefix_len(&self, s: f64) -> usize {
        self.steps.partition_point(|step| step.score >= s)
    }

    pub fn prefix_match(&self, len: usize) -> MatchResult {
        build_result(&self.steps[..len], self.n_gt)
    }
}

/// Descending score, then ascending input index.
pub(crate) fn score_order(dets: &[Detection], a: usize, b: usize) -> Ordering {
    dets[b]
        .score
        .total_cmp(&dets[a].score)
        .then_with(|| a.cmp(&b))
}

fn check_single_class(gts: &[GroundTruth], dets: &[Detection]) -> Result<()> {
    let mut classes = gts
        .iter()
        .map(|g| g.class_id)
        .chain(dets.iter().map(|d| d.class_id));
    if let Some(first) = classes.next() {
        if let Some(other) = classes.find(|&c| c != first) {
            return Err(Error::MixedClasses(first, other));
        }
    }
    Ok(())
}

/// Ground-truth indices grouped by image, ascending within each image.
fn index_by_image(gts: &[GroundTruth]) -> HashMap<ImageId, Vec<usize>> {
    let mut by_image: HashMap<ImageId, Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_image.entry(g.image_id).or_default().push(i);
    }
    by_image
}

fn run(gts: &[GroundTruth], dets: &[Detection], mut order: Vec<usize>, tau: f64) -> Vec<Step> {
    order.sort_by(|&a, &b| score_order(dets, a, b));
    let by_image = index_by_image(gts);
    let mut taken = vec![false; gts.len()];
    let mut steps = Vec::with_capacity(order.len());

    for d in order {
        let det = &dets[d];
        let candidates = by_image.get(&det.image_id).map(Vec::as_slice).unwrap_or(&[]);

        let mut best: Option<(usize, f64)> = None;
        let mut hits_ignore = false;
        for &g in candidates {
            let gt = &gts[g];
            if gt.ignore {
                hits_ignore |= gt.bbox.iou(&det.bbox) > tau;
                continue;
            }
            if taken[g] {
                continue;
            }
            let iou = gt.bbox.iou(&det.bbox);
            // strict: an earlier index keeps an IoU tie
            if iou > tau && best.map_or(true, |(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }

        let outcome = match best {
            Some((gt, iou)) => {
                taken[gt] = true;
                Outcome::Tp { gt, iou }
            }
            None if hits_ignore => Outcome::Ignored,
            None => Outcome::Fp,
        };
        steps.push(Step {
            det: d,
            score: det.score,
            outcome,
        });
    }
    steps
}

fn build_result(steps: &[Step], n_gt: usize) -> MatchResult {
    let mut result = MatchResult::default();
    for step in steps {
        match step.outcome {
            Outcome::Tp { gt, iou } => result.tp_pairs.push(TpPair {
                det: step.det,
                gt,
                iou,
            }),
            Outcome::Fp => result.n_fp += 1,
            Outcome::Ignored => result.n_ignored += 1,
        }
    }
    result.n_tp = result.tp_pairs.len();
    result.n_fn = n_gt - result.n_tp;
    result
}

fn count_gts(gts: &[GroundTruth]) -> usize {
    gts.iter().filter(|g| !g.ignore).count()
}

/// Greedy, score-ordered matching of the detections with `score >= s`.
///
/// All inputs must belong to one class; matching never crosses images. A
/// detection is a TP when its best unmatched, non-ignored ground truth has
/// `IoU > tau`. Score ties are processed by ascending detection index and IoU
/// ties go to the lower ground-truth index.
pub fn match_greedy(
    gts: &[GroundTruth],
    dets: &[Detection],
    s: f64,
    tau: f64,
) -> Result<MatchResult> {
    validate_score_threshold(s)?;
    validate_tau(tau)?;
    check_single_class(gts, dets)?;
    let retained = (0..dets.len()).filter(|&i| dets[i].score >= s).collect();
    let steps = run(gts, dets, retained, tau);
    Ok(build_result(&steps, count_gts(gts)))
}

/// Greedy matching of all detections, keeping the per-detection decisions.
pub fn greedy_trace(gts: &[GroundTruth], dets: &[Detection], tau: f64) -> Result<GreedyTrace> {
    validate_tau(tau)?;
    check_single_class(gts, dets)?;
    Ok(GreedyTrace {
        steps: run(gts, dets, (0..dets.len()).collect(), tau),
        n_gt: count_gts(gts),
    })
}
