use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{from_json, read_file};
use crate::error::{Error, Result};
use crate::eval::Category;
use crate::geometry::BoundingBox;
use crate::ids::{ClassId, ImageId};
use crate::matching::{Detection, GroundTruth};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: ImageId,
    pub width: f64,
    pub height: f64,
}

/// Validated ground truth.
///
/// Boxes reaching past their image are kept as they are and reported in
/// `warnings`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub images: Vec<ImageInfo>,
    pub categories: Vec<Category>,
    pub ground_truths: Vec<GroundTruth>,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct RawCoco {
    images: Vec<RawImage>,
    annotations: Vec<RawAnnotation>,
    categories: Vec<Category>,
}

#[derive(Deserialize)]
struct RawImage {
    id: u64,
    width: f64,
    height: f64,
}

#[derive(Deserialize)]
struct RawAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    bbox: [f64; 4],
    #[serde(default)]
    iscrowd: u8,
}

#[derive(Serialize, Deserialize)]
struct RawDetection {
    image_id: u64,
    category_id: u64,
    bbox: [f64; 4],
    score: f64,
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_ground_truth(&read_file(path.as_ref())?)
}

pub fn parse_ground_truth(bytes: &[u8]) -> Result<Dataset> {
    let raw: RawCoco = from_json(bytes)?;
    let mut warnings = Vec::new();

    let mut sizes = HashMap::with_capacity(raw.images.len());
    for (i, img) in raw.images.iter().enumerate() {
        if sizes.insert(img.id, (img.width, img.height)).is_some() {
            return Err(Error::schema(format!("images[{i}].id"), format!("duplicate image id {}", img.id)));
        }
    }
    let mut class_ids = HashSet::with_capacity(raw.categories.len());
    for (i, c) in raw.categories.iter().enumerate() {
        if !class_ids.insert(c.id) {
            return Err(Error::schema(format!("categories[{i}].id"), format!("duplicate category id {}", c.id)));
        }
    }

    let mut ground_truths = Vec::with_capacity(raw.annotations.len());
    for (i, a) in raw.annotations.iter().enumerate() {
        let at = |field: &str| format!("annotations[{i}].{field} (annotation id {})", a.id);
        let Some(&(width, height)) = sizes.get(&a.image_id) else {
            return Err(Error::schema(at("image_id"), format!("unknown image id {}", a.image_id)));
        };
        if !class_ids.contains(&ClassId(a.category_id)) {
            return Err(Error::schema(at("category_id"), format!("unknown category id {}", a.category_id)));
        }
        if a.iscrowd > 1 {
            return Err(Error::schema(at("iscrowd"), format!("expected 0 or 1, got {}", a.iscrowd)));
        }
        let [x, y, w, h] = a.bbox;
        if x < 0.0 || y < 0.0 {
            return Err(Error::schema(at("bbox"), format!("negative coordinates in {:?}", a.bbox)));
        }
        let bbox = BoundingBox::from_xywh(x, y, w, h).map_err(|e| Error::schema(at("bbox"), e.to_string()))?;
        if bbox.x_max() > width || bbox.y_max() > height {
            warnings.push(format!(
                "annotation id {}: box {:?} extends past image {} ({width}x{height})",
                a.id, a.bbox, a.image_id
            ));
        }
        let gt = GroundTruth::new(ImageId(a.image_id), ClassId(a.category_id), bbox);
        ground_truths.push(if a.iscrowd == 1 { gt.ignored() } else { gt });
    }

    let mut categories = raw.categories;
    categories.sort_by_key(|c| c.id);
    Ok(Dataset {
        images: raw
            .images
            .iter()
            .map(|i| ImageInfo {
                id: ImageId(i.id),
                width: i.width,
                height: i.height,
            })
            .collect(),
        categories,
        ground_truths,
        warnings,
    })
}

/// Loads a COCO results array. Every record must name a known image and
/// category and carry a score in `[0, 1]`.
pub fn load_detections(path: impl AsRef<Path>, dataset: &Dataset) -> Result<Vec<Detection>> {
    parse_detections(&read_file(path.as_ref())?, dataset)
}

pub fn parse_detections(bytes: &[u8], dataset: &Dataset) -> Result<Vec<Detection>> {
    let raw: Vec<RawDetection> = from_json(bytes)?;
    let images: HashSet<ImageId> = dataset.images.iter().map(|i| i.id).collect();
    let classes: HashSet<ClassId> = dataset.categories.iter().map(|c| c.id).collect();
    raw.iter()
        .enumerate()
        .map(|(i, r)| {
            let at = |field: &str| format!("[{i}].{field}");
            if !images.contains(&ImageId(r.image_id)) {
                return Err(Error::schema(at("image_id"), format!("unknown image id {}", r.image_id)));
            }
            if !classes.contains(&ClassId(r.category_id)) {
                return Err(Error::schema(at("category_id"), format!("unknown category id {}", r.category_id)));
            }
            let [x, y, w, h] = r.bbox;
            let bbox = BoundingBox::from_xywh(x, y, w, h).map_err(|e| Error::schema(at("bbox"), e.to_string()))?;
            Detection::new(ImageId(r.image_id), ClassId(r.category_id), bbox, r.score)
                .map_err(|e| Error::schema(at("score"), e.to_string()))
        })
        .collect()
}

/// Writes detections in the COCO results format.
pub fn write_detections<W: Write>(dets: &[Detection], writer: W) -> Result<()> {
    let raw: Vec<RawDetection> = dets
        .iter()
        .map(|d| RawDetection {
            image_id: d.image_id.0,
            category_id: d.class_id.0,
            bbox: d.bbox.to_xywh(),
            score: d.score,
        })
        .collect();
    serde_json::to_writer(writer, &raw).map_err(|e| Error::Io(e.into()))
}

/// Writes a dataset as a COCO annotation file with ids assigned in order.
pub fn write_ground_truth<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    #[derive(Serialize)]
    struct OutAnnotation {
        id: usize,
        image_id: u64,
        category_id: u64,
        bbox: [f64; 4],
        area: f64,
        iscrowd: u8,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        images: &'a [ImageInfo],
        annotations: Vec<OutAnnotation>,
        categories: &'a [Category],
    }
    let annotations = dataset
        .ground_truths
        .iter()
        .enumerate()
        .map(|(i, g)| OutAnnotation {
            id: i + 1,
            image_id: g.image_id.0,
            category_id: g.class_id.0,
            bbox: g.bbox.to_xywh(),
            area: g.bbox.area(),
            iscrowd: u8::from(g.ignore),
        })
        .collect();
    let out = Out {
        images: &dataset.images,
        annotations,
        categories: &dataset.categories,
    };
    serde_json::to_writer(writer, &out).map_err(|e| Error::Io(e.into()))
}
