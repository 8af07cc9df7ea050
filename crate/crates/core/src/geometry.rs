//! Axis-aligned boxes and IoU.
//!
//! Boxes are stored in corner form. Zero-area and non-finite boxes cannot be
//! constructed, so every function here is total on its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle in pixel coordinates, `x_max > x_min`, `y_max > y_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let invalid = |reason| Error::InvalidBox {
            x_min,
            y_min,
            x_max,
            y_max,
            reason,
        };
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(invalid("coordinates must be finite"));
        }
        if x_max <= x_min || y_max <= y_min {
            return Err(invalid("box has zero or negative area"));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Builds a box from COCO's `[x, y, width, height]`.
    pub fn from_xywh(x: f64, y: f64, width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && height.is_finite()) || width <= 0.0 || height <= 0.0 {
            return Err(Error::InvalidBox {
                x_min: x,
                y_min: y,
                x_max: x + width,
                y_max: y + height,
                reason: "width and height must be positive",
            });
        }
        Self::new(x, y, x + width, y + height)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// `[x, y, width, height]`, the COCO serialization.
    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.width(), self.height()]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersection over union, in `[0, 1]`.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    /// `1 - IoU`, a metric on boxes.
    pub fn iou_distance(&self, other: &BoundingBox) -> f64 {
        1.0 - self.iou(other)
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            x_min: f64,
            y_min: f64,
            x_max: f64,
            y_max: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        BoundingBox::new(raw.x_min, raw.y_min, raw.x_max, raw.y_max)
            .map_err(serde::de::Error::custom)
    }
}

pub fn area(b: &BoundingBox) -> f64 {
    b.area()
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou(b)
}

pub fn iou_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou_distance(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    /// Counts cells of side `step` whose centres fall inside the box.
    fn raster_cells(b: &BoundingBox, step: f64, extent: f64) -> Vec<(i64, i64)> {
        let n = (extent / step).round() as i64;
        let mut cells = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let cx = (i as f64 + 0.5) * step;
                let cy = (j as f64 + 0.5) * step;
                if cx > b.x_min && cx < b.x_max && cy > b.y_min && cy < b.y_max {
                    cells.push((i, j));
                }
            }
        }
        cells
    }

    #[test]
    fn area_examples() {
        assert_eq!(bb(0.0, 0.0, 2.0, 2.0).area(), 4.0);
        assert_eq!(bb(0.0, 0.0, 1.0, 3.0).area(), 3.0);
        let b = bb(0.5, 0.5, 2.5, 1.5);
        let cells = raster_cells(&b, 0.5, 4.0).len() as f64;
        assert_eq!(cells * 0.25, 2.0);
        assert_eq!(b.area(), 2.0);
    }

    #[test]
    fn iou_matches_raster_oracle() {
        let a = bb(0.0, 0.0, 2.0, 2.0);
        let b = bb(1.0, 1.0, 3.0, 3.0);
        let ca = raster_cells(&a, 1.0, 4.0);
        let cb = raster_cells(&b, 1.0, 4.0);
        let inter = ca.iter().filter(|c| cb.contains(c)).count() as f64;
        let union = ca.len() as f64 + cb.len() as f64 - inter;
        assert_eq!(inter / union, 1.0 / 7.0);
        assert!((a.iou(&b) - 1.0 / 7.0).abs() < 1e-15);
        assert!((a.iou_distance(&b) - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn identity_and_disjoint() {
        let a = bb(1.5, 2.0, 7.25, 9.0);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou_distance(&a), 0.0);
        let far = bb(100.0, 100.0, 101.0, 101.0);
        assert_eq!(a.iou(&far), 0.0);
        assert_eq!(a.iou_distance(&far), 1.0);
        // touching edges share no area
        let touching = bb(7.25, 2.0, 8.0, 9.0);
        assert_eq!(a.iou(&touching), 0.0);
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, f64::INFINITY, 1.0).is_err());
        assert!(BoundingBox::from_xywh(1.0, 1.0, 0.0, 5.0).is_err());
    }

    #[test]
    fn xywh_conversion() {
        let b = BoundingBox::from_xywh(10.0, 20.0, 30.0, 40.0).unwrap();
        assert_eq!((b.x_min(), b.y_min(), b.x_max(), b.y_max()), (10.0, 20.0, 40.0, 60.0));
        assert_eq!(b.to_xywh(), [10.0, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn deserialize_validates() {
        let ok: BoundingBox =
            serde_json::from_str(r#"{"x_min":0,"y_min":0,"x_max":1,"y_max":2}"#).unwrap();
        assert_eq!(ok.area(), 2.0);
        assert!(serde_json::from_str::<BoundingBox>(
            r#"{"x_min":0,"y_min":0,"x_max":0,"y_max":2}"#
        )
        .is_err());
    }
}
