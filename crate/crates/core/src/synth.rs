//! Deterministic synthetic inputs: small hand-built scenarios, random scenes
//! for property checks, a COCO-validation-sized dataset and video streams.
//!
//! Everything random takes a seed and uses ChaCha8, so the same seed gives
//! the same data on every platform.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::{Dataset, ImageInfo};
use crate::eval::Category;
use crate::geometry::BoundingBox;
use crate::ids::{ClassId, ImageId};
use crate::matching::{Detection, GroundTruth};
use crate::video::{FrameDetections, StreamDetection};

/// Ground truths and detections of one class, or of a whole dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub gts: Vec<GroundTruth>,
    pub dets: Vec<Detection>,
}

pub const SCENARIO_CLASS: ClassId = ClassId(1);

fn square(x: f64) -> BoundingBox {
    BoundingBox::from_xywh(x, 0.0, 10.0, 10.0).unwrap()
}

fn four_objects() -> Vec<GroundTruth> {
    [0.0, 20.0, 40.0, 60.0]
        .into_iter()
        .map(|x| GroundTruth::new(ImageId(0), SCENARIO_CLASS, square(x)))
        .collect()
}

fn det(bbox: BoundingBox, score: f64) -> Detection {
    Detection::new(ImageId(0), SCENARIO_CLASS, bbox, score).unwrap()
}

/// Four objects, two found with perfect boxes and nothing else reported.
pub fn half_recall_perfect_boxes() -> Scenario {
    Scenario {
        gts: four_objects(),
        dets: vec![det(square(0.0), 0.9), det(square(20.0), 0.8)],
    }
}

/// Four objects, each found with a perfect box, each preceded in score order
/// by a near duplicate that overlaps it with IoU 3/7.
pub fn duplicates_before_every_hit() -> Scenario {
    let mut dets = Vec::new();
    for (k, x) in [0.0, 20.0, 40.0, 60.0].into_iter().enumerate() {
        let top = 0.9 - 0.1 * k as f64;
        dets.push(det(square(x + 4.0), top));
        dets.push(det(square(x), top - 0.05));
    }
    Scenario {
        gts: four_objects(),
        dets,
    }
}

/// Two loose hits at IoU 0.605, two false positives and two misses. The false
/// positives share the second hit's score, so no threshold separates them.
pub fn loose_boxes_with_clutter() -> Scenario {
    loose(6.05)
}

/// [`loose_boxes_with_clutter`] with both hits localized perfectly.
pub fn tight_boxes_with_clutter() -> Scenario {
    loose(10.0)
}

fn loose(width: f64) -> Scenario {
    let hit = |x: f64| BoundingBox::from_xywh(x, 0.0, width, 10.0).unwrap();
    Scenario {
        gts: four_objects(),
        dets: vec![
            det(hit(0.0), 0.9),
            det(hit(20.0), 0.6),
            det(square(200.0), 0.6),
            det(square(220.0), 0.6),
        ],
    }
}

/// A random box with corners inside `[0, extent]^2` and sides at least 1.
pub fn random_box<R: Rng>(rng: &mut R, extent: f64) -> BoundingBox {
    let w = rng.random_range(1.0..extent / 2.0);
    let h = rng.random_range(1.0..extent / 2.0);
    let x = rng.random_range(0.0..extent - w);
    let y = rng.random_range(0.0..extent - h);
    BoundingBox::from_xywh(x, y, w, h).unwrap()
}

/// `b` with every side moved by up to `amount` times its length.
pub fn jitter<R: Rng>(rng: &mut R, b: &BoundingBox, amount: f64) -> BoundingBox {
    let (w, h) = (b.width(), b.height());
    let mut d = |len: f64| if amount > 0.0 { rng.random_range(-amount..amount) * len } else { 0.0 };
    let x0 = b.x_min() + d(w);
    let x1 = (b.x_max() + d(w)).max(x0 + 0.1 * w);
    let y0 = b.y_min() + d(h);
    let y1 = (b.y_max() + d(h)).max(y0 + 0.1 * h);
    BoundingBox::new(x0, y0, x1, y1).unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub n_images: u64,
    pub n_classes: u64,
    pub max_gts_per_image: usize,
    pub max_dets_per_image: usize,
    pub extent: f64,
    /// Fraction of ground truths marked as crowd regions.
    pub crowd_rate: f64,
    /// Relative box perturbation of detections placed on objects.
    pub jitter: f64,
    /// Round scores to this many levels to create ties; `None` keeps them continuous.
    pub score_levels: Option<u32>,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            n_images: 3,
            n_classes: 1,
            max_gts_per_image: 6,
            max_dets_per_image: 10,
            extent: 100.0,
            crowd_rate: 0.0,
            jitter: 0.15,
            score_levels: None,
        }
    }
}

/// Random objects per image with detections that are either perturbed
/// copies of an object of the same class or free-floating boxes.
pub fn random_scene<R: Rng>(rng: &mut R, p: &SceneParams) -> Scenario {
    let mut scene = Scenario::default();
    for image in 0..p.n_images {
        let image_id = ImageId(image);
        let n_gt = rng.random_range(0..=p.max_gts_per_image);
        let first = scene.gts.len();
        for _ in 0..n_gt {
            let class_id = ClassId(rng.random_range(0..p.n_classes));
            let g = GroundTruth::new(image_id, class_id, random_box(rng, p.extent));
            scene.gts.push(if rng.random::<f64>() < p.crowd_rate { g.ignored() } else { g });
        }
        let n_det = rng.random_range(0..=p.max_dets_per_image);
        for _ in 0..n_det {
            let (class_id, bbox) = if n_gt > 0 && rng.random::<f64>() < 0.6 {
                let g = &scene.gts[first + rng.random_range(0..n_gt)];
                (g.class_id, jitter(rng, &g.bbox, p.jitter))
            } else {
                (ClassId(rng.random_range(0..p.n_classes)), random_box(rng, p.extent))
            };
            let mut score: f64 = rng.random();
            if let Some(levels) = p.score_levels {
                score = (score * levels as f64).round() / levels as f64;
            }
            scene.dets.push(Detection::new(image_id, class_id, bbox, score).unwrap());
        }
    }
    scene
}

/// Shape of a synthetic dataset in the spirit of COCO val2017.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetParams {
    pub n_images: u64,
    pub n_classes: u64,
    pub max_gts_per_image: usize,
    pub dets_per_image: usize,
    /// Detections placed on each object before clutter fills the rest.
    pub hits_per_object: usize,
    pub crowd_rate: f64,
}

impl Default for DatasetParams {
    /// 5000 images, 80 classes, about 37k objects and 500k detections.
    fn default() -> Self {
        Self {
            n_images: 5000,
            n_classes: 80,
            max_gts_per_image: 14,
            dets_per_image: 100,
            hits_per_object: 3,
            crowd_rate: 0.01,
        }
    }
}

pub fn synthetic_dataset(params: &DatasetParams, seed: u64) -> (Dataset, Vec<Detection>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (width, height) = (640.0, 480.0);
    let categories: Vec<Category> = (1..=params.n_classes)
        .map(|c| Category::new(ClassId(c), format!("category_{c}")))
        .collect();
    let mut ds = Dataset {
        categories,
        ..Dataset::default()
    };
    let mut dets = Vec::with_capacity(params.n_images as usize * params.dets_per_image);
    for image in 1..=params.n_images {
        let image_id = ImageId(image);
        ds.images.push(ImageInfo {
            id: image_id,
            width,
            height,
        });
        let n_gt = rng.random_range(0..=params.max_gts_per_image);
        let first = ds.ground_truths.len();
        for _ in 0..n_gt {
            let class_id = ClassId(rng.random_range(1..=params.n_classes));
            let g = GroundTruth::new(image_id, class_id, random_box(&mut rng, height));
            ds.ground_truths.push(if rng.random::<f64>() < params.crowd_rate { g.ignored() } else { g });
        }
        let mut placed = 0;
        for g in first..ds.ground_truths.len() {
            for _ in 0..params.hits_per_object.min(params.dets_per_image - placed) {
                let g = &ds.ground_truths[g];
                let bbox = jitter(&mut rng, &g.bbox, 0.2);
                let score = rng.random_range(0.2..1.0);
                dets.push(Detection::new(image_id, g.class_id, bbox, score).unwrap());
                placed += 1;
            }
        }
        for _ in placed..params.dets_per_image {
            let class_id = ClassId(rng.random_range(1..=params.n_classes));
            let score = rng.random_range(0.0..0.6);
            dets.push(Detection::new(image_id, class_id, random_box(&mut rng, height), score).unwrap());
        }
    }
    (ds, dets)
}

/// Class distribution with `score` on `class_id` and the rest spread evenly.
///
/// `score` is raised to `1 / n_classes` if needed so the class stays on top.
pub fn class_scores(class_id: ClassId, score: f64, n_classes: usize) -> Vec<f64> {
    assert!(n_classes >= 1 && (class_id.0 as usize) < n_classes);
    if n_classes == 1 {
        return vec![1.0];
    }
    let s = score.clamp(1.0 / n_classes as f64, 1.0);
    let rest = (1.0 - s) / (n_classes - 1) as f64;
    let mut v = vec![rest; n_classes];
    // max() guards the tie at s = 1/n against rounding in `rest`
    v[class_id.0 as usize] = s.max(rest);
    v
}

/// An object visible over a range of frames, moving at constant velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSpec {
    pub class_id: ClassId,
    pub start: BoundingBox,
    pub velocity: (f64, f64),
    pub frames: Range<u64>,
    pub base_score: f64,
}

/// False positives scattered at random positions in every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ClutterSpec {
    pub class_id: ClassId,
    pub per_frame: usize,
    pub base_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub n_frames: u64,
    pub n_classes: usize,
    pub tracks: Vec<TrackSpec>,
    pub clutter: Vec<ClutterSpec>,
    /// Relative box perturbation of tracked detections.
    pub box_jitter: f64,
    /// Scores are drawn uniformly from `base ± score_noise`.
    pub score_noise: f64,
    /// Side of the square area clutter is placed in.
    pub extent: f64,
}

/// Frames of detections plus per-frame ground truths (frame index as image id).
pub fn generate_stream(spec: &StreamSpec, seed: u64) -> (Vec<FrameDetections>, Vec<GroundTruth>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(spec.n_frames as usize);
    let mut gts = Vec::new();
    let noisy = |rng: &mut ChaCha8Rng, base: f64| {
        if spec.score_noise > 0.0 {
            (base + rng.random_range(-spec.score_noise..spec.score_noise)).clamp(0.0, 1.0)
        } else {
            base
        }
    };
    for f in 0..spec.n_frames {
        let mut detections = Vec::new();
        for t in spec.tracks.iter().filter(|t| t.frames.contains(&f)) {
            let dt = (f - t.frames.start) as f64;
            let (dx, dy) = (t.velocity.0 * dt, t.velocity.1 * dt);
            let b = &t.start;
            let bbox = BoundingBox::new(b.x_min() + dx, b.y_min() + dy, b.x_max() + dx, b.y_max() + dy).unwrap();
            gts.push(GroundTruth::new(ImageId(f), t.class_id, bbox));
            let seen = jitter(&mut rng, &bbox, spec.box_jitter);
            let score = noisy(&mut rng, t.base_score);
            detections.push(
                StreamDetection::new(t.class_id, seen, class_scores(t.class_id, score, spec.n_classes)).unwrap(),
            );
        }
        for c in &spec.clutter {
            for _ in 0..c.per_frame {
                let bbox = random_box(&mut rng, spec.extent);
                let score = noisy(&mut rng, c.base_score);
                detections.push(
                    StreamDetection::new(c.class_id, bbox, class_scores(c.class_id, score, spec.n_classes)).unwrap(),
                );
            }
        }
        frames.push(FrameDetections {
            frame_index: f,
            detections,
        });
    }
    (frames, gts)
}

/// Class of [`contrast_stream`] whose hits score 0.30 and clutter 0.25.
pub const LOW_CONFIDENCE_CLASS: ClassId = ClassId(1);
/// Class of [`contrast_stream`] with one persistent object at 0.80 and clutter at 0.60-0.70.
pub const HIGH_CONFIDENCE_CLASS: ClassId = ClassId(2);

/// A 10-frame stream built so that the best score threshold of one class is
/// 0.30 and of the other 0.80.
///
/// The low-confidence class shows a new object every frame, detected at
/// 0.30, plus one false positive at 0.25. The high-confidence class has one
/// static object detected at 0.80 in every frame and one false positive at
/// 0.60 or 0.70. Apart from the static object nothing overlaps anything in
/// the neighbouring frames, so only that object is ever linked.
pub fn contrast_stream() -> (Vec<FrameDetections>, Vec<GroundTruth>) {
    const N_CLASSES: usize = 4;
    let sq = |x: f64, y: f64| BoundingBox::from_xywh(x, y, 40.0, 40.0).unwrap();
    let sd = |class: ClassId, bbox, scores: [f64; N_CLASSES]| StreamDetection::new(class, bbox, scores.to_vec()).unwrap();
    let mut frames = Vec::new();
    let mut gts = Vec::new();
    for f in 0..10u64 {
        let col = if f % 2 == 0 { 0.0 } else { 100.0 };
        let low_hit = sq(col, 0.0);
        let high_hit = sq(200.0, 200.0);
        gts.push(GroundTruth::new(ImageId(f), LOW_CONFIDENCE_CLASS, low_hit));
        gts.push(GroundTruth::new(ImageId(f), HIGH_CONFIDENCE_CLASS, high_hit));
        let clutter = if f % 2 == 0 { 0.6 } else { 0.7 };
        let rest = (1.0 - clutter) / 3.0;
        frames.push(FrameDetections {
            frame_index: f,
            detections: vec![
                sd(LOW_CONFIDENCE_CLASS, low_hit, [0.25, 0.30, 0.25, 0.20]),
                sd(LOW_CONFIDENCE_CLASS, sq(col, 100.0), [0.25, 0.25, 0.25, 0.25]),
                sd(HIGH_CONFIDENCE_CLASS, high_hit, [0.10, 0.05, 0.80, 0.05]),
                sd(HIGH_CONFIDENCE_CLASS, sq(col, 300.0), [rest, rest, clutter, rest]),
            ],
        });
    }
    (frames, gts)
}
