use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{from_json, read_file};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::ids::{ClassId, ImageId};
use crate::matching::GroundTruth;
use crate::video::{FrameDetections, StreamDetection};

/// Stream fixture document.
///
/// ```json
/// {"frames": [{"frame_index": 0,
///              "detections": [{"class_id": 1, "bbox": [x, y, w, h], "class_scores": [0.1, 0.9]}],
///              "ground_truths": [{"class_id": 1, "bbox": [x, y, w, h]}]}]}
/// ```
///
/// `ground_truths` is optional per frame and is only needed for evaluation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StreamFixture {
    pub frames: Vec<FixtureFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFrame {
    pub frame_index: u64,
    pub detections: Vec<FixtureDetection>,
    #[serde(default)]
    pub ground_truths: Vec<FixtureGroundTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureDetection {
    pub class_id: ClassId,
    pub bbox: [f64; 4],
    pub class_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureGroundTruth {
    pub class_id: ClassId,
    pub bbox: [f64; 4],
}

impl StreamFixture {
    pub fn new(frames: &[FrameDetections], gts: &[GroundTruth]) -> Self {
        Self {
            frames: frames
                .iter()
                .map(|f| FixtureFrame {
                    frame_index: f.frame_index,
                    detections: f
                        .detections
                        .iter()
                        .map(|d| FixtureDetection {
                            class_id: d.class_id,
                            bbox: d.bbox.to_xywh(),
                            class_scores: d.class_scores.clone(),
                        })
                        .collect(),
                    ground_truths: gts
                        .iter()
                        .filter(|g| g.image_id.0 == f.frame_index)
                        .map(|g| FixtureGroundTruth {
                            class_id: g.class_id,
                            bbox: g.bbox.to_xywh(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Validated frames, and ground truths with the frame index as image id.
    pub fn into_parts(self) -> Result<(Vec<FrameDetections>, Vec<GroundTruth>)> {
        let mut frames = Vec::with_capacity(self.frames.len());
        let mut gts = Vec::new();
        for (i, f) in self.frames.into_iter().enumerate() {
            let mut detections = Vec::with_capacity(f.detections.len());
            for (j, d) in f.detections.into_iter().enumerate() {
                let at = format!("frames[{i}].detections[{j}]");
                let [x, y, w, h] = d.bbox;
                let bbox = BoundingBox::from_xywh(x, y, w, h).map_err(|e| Error::schema(format!("{at}.bbox"), e.to_string()))?;
                detections.push(
                    StreamDetection::new(d.class_id, bbox, d.class_scores)
                        .map_err(|e| Error::schema(format!("{at}.class_scores"), e.to_string()))?,
                );
            }
            for (j, g) in f.ground_truths.into_iter().enumerate() {
                let [x, y, w, h] = g.bbox;
                let bbox = BoundingBox::from_xywh(x, y, w, h)
                    .map_err(|e| Error::schema(format!("frames[{i}].ground_truths[{j}].bbox"), e.to_string()))?;
                gts.push(GroundTruth::new(ImageId(f.frame_index), g.class_id, bbox));
            }
            if let Some(prev) = frames.last().map(|p: &FrameDetections| p.frame_index) {
                if f.frame_index <= prev {
                    return Err(Error::schema(
                        format!("frames[{i}].frame_index"),
                        format!("{} does not follow {prev}", f.frame_index),
                    ));
                }
            }
            frames.push(FrameDetections {
                frame_index: f.frame_index,
                detections,
            });
        }
        Ok((frames, gts))
    }
}

pub fn parse_stream(bytes: &[u8]) -> Result<(Vec<FrameDetections>, Vec<GroundTruth>)> {
    from_json::<StreamFixture>(bytes)?.into_parts()
}

pub fn load_stream(path: impl AsRef<Path>) -> Result<(Vec<FrameDetections>, Vec<GroundTruth>)> {
    parse_stream(&read_file(path.as_ref())?)
}

pub fn write_stream<W: Write>(frames: &[FrameDetections], gts: &[GroundTruth], writer: W) -> Result<()> {
    serde_json::to_writer(writer, &StreamFixture::new(frames, gts)).map_err(|e| Error::Io(e.into()))
}
