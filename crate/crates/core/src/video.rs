//! Online linking of detections across video frames.
//!
//! Consecutive frames are associated with the Hungarian solver on a blend of
//! box overlap and class-distribution similarity. A linked detection's score
//! is updated with Bayes' rule, using its tubelet's previous score as the
//! prior and the detection's own score as the likelihood. Detections are then
//! filtered with either one general threshold or per-class thresholds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::ids::{ClassId, ImageId};
use crate::matching::{hungarian, Detection};

pub const DEFAULT_ALPHA: f64 = 0.7;
pub const DEFAULT_COST_CUTOFF: f64 = 0.7;
/// Rise over a tubelet's lowest score that marks it as a dominant object.
pub const DOMINANCE_RISE: f64 = 0.2;
const PROBABILITY_MARGIN: f64 = 1e-6;
const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// A detection carrying a full class distribution.
///
/// `class_scores[k]` is the probability of class id `k`; `class_id` must be
/// one of the most probable classes and `score` is its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamDetection {
    pub class_id: ClassId,
    pub bbox: BoundingBox,
    pub class_scores: Vec<f64>,
}

impl StreamDetection {
    pub fn new(class_id: ClassId, bbox: BoundingBox, class_scores: Vec<f64>) -> Result<Self> {
        let d = Self {
            class_id,
            bbox,
            class_scores,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidStream(msg));
        if let Some(v) = self.class_scores.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return bad(format!("class score {v} outside [0, 1]"));
        }
        let sum: f64 = self.class_scores.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return bad(format!("class scores sum to {sum}, expected 1"));
        }
        let Some(&own) = self.class_scores.get(self.class_id.0 as usize) else {
            return bad(format!(
                "class id {} has no entry among {} class scores",
                self.class_id,
                self.class_scores.len()
            ));
        };
        if self.class_scores.iter().any(|&v| v > own) {
            return bad(format!("class id {} is not the most probable class", self.class_id));
        }
        Ok(())
    }

    /// Probability of the labelled class, the maximum of `class_scores`.
    pub fn score(&self) -> f64 {
        self.class_scores[self.class_id.0 as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetections {
    pub frame_index: u64,
    pub detections: Vec<StreamDetection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Weight of `1 - IoU` against the halved L1 distance of class scores.
    pub alpha: f64,
    /// Links costing more than this are severed.
    pub cost_cutoff: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            cost_cutoff: DEFAULT_COST_CUTOFF,
        }
    }
}

impl LinkParams {
    pub fn new(alpha: f64, cost_cutoff: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidStream(format!("alpha {alpha} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&cost_cutoff) {
            return Err(Error::InvalidStream(format!("cost cutoff {cost_cutoff} outside [0, 1]")));
        }
        Ok(Self { alpha, cost_cutoff })
    }

    /// Linking cost in `[0, 1]`.
    pub fn cost(&self, a: &StreamDetection, b: &StreamDetection) -> f64 {
        self.alpha * a.bbox.iou_distance(&b.bbox)
            + (1.0 - self.alpha) * 0.5 * l1_distance(&a.class_scores, &b.class_scores)
    }
}

/// L1 distance; a missing trailing entry counts as probability 0.
fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub prev: usize,
    pub curr: usize,
    pub cost: f64,
}

/// Associates detections of two consecutive frames.
///
/// A pair is admissible when the boxes overlap and its cost is at most the
/// cutoff. The assignment maximizes the number of admissible links and then
/// minimizes their total cost. Links come back sorted by `curr`.
pub fn link_frames(prev: &FrameDetections, curr: &FrameDetections, params: &LinkParams) -> Vec<Link> {
    if prev.detections.is_empty() || curr.detections.is_empty() {
        return Vec::new();
    }
    // admissible costs lie in [0, 1]; 2 prices any inadmissible pair above them
    const BLOCKED: f64 = 2.0;
    let costs: Vec<Vec<f64>> = prev
        .detections
        .iter()
        .map(|p| {
            curr.detections
                .iter()
                .map(|c| {
                    let cost = params.cost(p, c);
                    let overlaps = p.bbox.iou(&c.bbox) > 0.0;
                    if overlaps && cost <= params.cost_cutoff {
                        cost
                    } else {
                        BLOCKED
                    }
                })
                .collect()
        })
        .collect();
    let assignment = hungarian(&costs).expect("link costs are finite and rectangular");
    let mut links: Vec<Link> = assignment
        .pairs
        .into_iter()
        .filter(|&(p, c)| costs[p][c] < BLOCKED)
        .map(|(p, c)| Link {
            prev: p,
            curr: c,
            cost: costs[p][c],
        })
        .collect();
    links.sort_by_key(|l| l.curr);
    links
}

/// Two-hypothesis Bayes update: object present or not.
///
/// Both arguments are clamped to `[1e-6, 1 - 1e-6]` first, so the result is
/// always strictly inside `(0, 1)`.
pub fn bayes_update(prior: f64, likelihood: f64) -> f64 {
    let clamp = |p: f64| p.clamp(PROBABILITY_MARGIN, 1.0 - PROBABILITY_MARGIN);
    let (p, q) = (clamp(prior), clamp(likelihood));
    let joint = p * q;
    joint / (joint + (1.0 - p) * (1.0 - q))
}

/// Score thresholds applied to the rescored detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub per_class: BTreeMap<ClassId, f64>,
    /// Used for classes without their own entry.
    pub fallback: f64,
}

impl Thresholds {
    /// One threshold for every class.
    pub fn general(threshold: f64) -> Result<Self> {
        Self::per_class(BTreeMap::new(), threshold)
    }

    pub fn per_class(per_class: BTreeMap<ClassId, f64>, fallback: f64) -> Result<Self> {
        for &t in per_class.values().chain(std::iter::once(&fallback)) {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidScoreThreshold(t));
            }
        }
        Ok(Self {
            per_class,
            fallback,
        })
    }

    pub fn for_class(&self, class_id: ClassId) -> f64 {
        self.per_class.get(&class_id).copied().unwrap_or(self.fallback)
    }
}

/// A chain of linked detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tubelet {
    pub id: usize,
    pub class_id: ClassId,
    pub boxes: Vec<(u64, BoundingBox)>,
    pub updated_score: f64,
    pub score_history: Vec<f64>,
    pub dominant: bool,
}

impl Tubelet {
    fn start(id: usize, frame: u64, det: &StreamDetection) -> Self {
        Self {
            id,
            class_id: det.class_id,
            boxes: vec![(frame, det.bbox)],
            updated_score: det.score(),
            score_history: vec![det.score()],
            dominant: false,
        }
    }

    fn extend(&mut self, frame: u64, det: &StreamDetection) {
        let score = bayes_update(self.updated_score, det.score());
        self.class_id = det.class_id;
        self.boxes.push((frame, det.bbox));
        self.score_history.push(score);
        self.updated_score = score;
        let lowest = self.score_history.iter().copied().fold(f64::INFINITY, f64::min);
        if score - lowest >= DOMINANCE_RISE {
            self.dominant = true;
        }
    }
}

/// A detection after rescoring and thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescoredDetection {
    pub class_id: ClassId,
    pub bbox: BoundingBox,
    pub class_scores: Vec<f64>,
    pub raw_score: f64,
    /// Tubelet score after this frame's update.
    pub score: f64,
    pub tubelet: usize,
    pub dominant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFrame {
    pub frame_index: u64,
    pub detections: Vec<RescoredDetection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamOutput {
    pub frames: Vec<OutputFrame>,
    pub tubelets: Vec<Tubelet>,
}

impl StreamOutput {
    /// Retained detections as evaluation input, one image per frame.
    pub fn detections(&self) -> Vec<Detection> {
        self.frames
            .iter()
            .flat_map(|f| {
                f.detections.iter().map(move |d| Detection {
                    image_id: ImageId(f.frame_index),
                    class_id: d.class_id,
                    bbox: d.bbox,
                    score: d.score,
                })
            })
            .collect()
    }
}

/// Links, rescores and filters a stream frame by frame.
///
/// Linking sees every detection regardless of threshold, so two runs that
/// differ only in their thresholds assign identical scores. A detection that
/// starts a new tubelet keeps its raw score.
pub fn run_stream(
    frames: &[FrameDetections],
    thresholds: &Thresholds,
    params: &LinkParams,
) -> Result<StreamOutput> {
    for pair in frames.windows(2) {
        if pair[1].frame_index <= pair[0].frame_index {
            return Err(Error::InvalidStream(format!(
                "frame index {} does not follow {}",
                pair[1].frame_index, pair[0].frame_index
            )));
        }
    }
    for f in frames {
        for d in &f.detections {
            d.validate()?;
        }
    }

    let mut tubelets: Vec<Tubelet> = Vec::new();
    let mut out_frames = Vec::with_capacity(frames.len());
    // tubelet id of each detection in the previous frame
    let mut prev_members: Vec<usize> = Vec::new();
    let mut prev_frame: Option<&FrameDetections> = None;

    for frame in frames {
        let links = prev_frame.map_or_else(Vec::new, |p| link_frames(p, frame, params));
        let mut linked_from: Vec<Option<usize>> = vec![None; frame.detections.len()];
        for link in &links {
            linked_from[link.curr] = Some(link.prev);
        }

        let mut members = Vec::with_capacity(frame.detections.len());
        let mut detections = Vec::new();
        for (j, det) in frame.detections.iter().enumerate() {
            let id = match linked_from[j] {
                Some(i) => {
                    let id = prev_members[i];
                    tubelets[id].extend(frame.frame_index, det);
                    id
                }
                None => {
                    let id = tubelets.len();
                    tubelets.push(Tubelet::start(id, frame.frame_index, det));
                    id
                }
            };
            members.push(id);
            let t = &tubelets[id];
            if t.updated_score >= thresholds.for_class(det.class_id) {
                detections.push(RescoredDetection {
                    class_id: det.class_id,
                    bbox: det.bbox,
                    class_scores: det.class_scores.clone(),
                    raw_score: det.score(),
                    score: t.updated_score,
                    tubelet: id,
                    dominant: t.dominant,
                });
            }
        }
        out_frames.push(OutputFrame {
            frame_index: frame.frame_index,
            detections,
        });
        prev_members = members;
        prev_frame = Some(frame);
    }

    Ok(StreamOutput {
        frames: out_frames,
        tubelets,
    })
}
