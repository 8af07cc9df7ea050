//! File formats: COCO annotations and results, evaluation reports, curve
//! tables, video stream fixtures and per-class threshold files.
//!
//! Reals in reports and curve tables are written with four decimals. JSON
//! loaders report the path of the offending field, e.g.
//! `annotations[3].bbox`.

mod coco;
mod curves;
mod report;
mod stream;
mod thresholds;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

pub use coco::{
    load_detections, load_ground_truth, parse_detections, parse_ground_truth, write_detections,
    write_ground_truth, Dataset, ImageInfo,
};
pub use curves::{export_curves, write_curves, CURVE_COLUMNS};
pub use report::{
    export_report, import_report, parse_report, write_comparison, write_report, Format,
};
pub use stream::{
    load_stream, parse_stream, write_stream, FixtureDetection, FixtureFrame, FixtureGroundTruth, StreamFixture,
};
pub use thresholds::{load_thresholds, ThresholdEntry, ThresholdsFile, THRESHOLDS_SCHEMA};

/// Decimals kept in exported reals.
pub const DECIMALS: usize = 4;

/// Rounds to [`DECIMALS`] places, as every export does.
pub fn round_decimals(v: f64) -> f64 {
    let scale = 10f64.powi(DECIMALS as i32);
    (v * scale).round() / scale
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Deserializes JSON, naming the failing field on error.
pub(crate) fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Json {
            path: if path == "." { "<document>".to_string() } else { path },
            source: e.into_inner(),
        }
    })
}
