use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{from_json, read_file};
use crate::error::{Error, Result};
use crate::ids::ClassId;
use crate::olrp::SweepResult;
use crate::video::Thresholds;

pub const THRESHOLDS_SCHEMA: &str = "lrp_thresholds_v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub class_id: ClassId,
    pub s_star: f64,
    pub olrp: f64,
}

/// Per-class optimal score thresholds, as consumed by stream filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsFile {
    pub schema: String,
    pub tau: f64,
    pub thresholds: Vec<ThresholdEntry>,
}

impl ThresholdsFile {
    /// One entry per evaluable sweep, in input order.
    pub fn from_sweeps(tau: f64, sweeps: &[SweepResult]) -> Self {
        Self {
            schema: THRESHOLDS_SCHEMA.to_string(),
            tau,
            thresholds: sweeps
                .iter()
                .filter_map(|s| {
                    Some(ThresholdEntry {
                        class_id: s.class_id,
                        s_star: s.s_star()?,
                        olrp: s.olrp()?,
                    })
                })
                .collect(),
        }
    }

    /// Thresholds with `fallback` for classes not listed.
    pub fn to_thresholds(&self, fallback: f64) -> Result<Thresholds> {
        let map: BTreeMap<ClassId, f64> = self.thresholds.iter().map(|t| (t.class_id, t.s_star)).collect();
        Thresholds::per_class(map, fallback)
    }
}

pub fn load_thresholds(path: impl AsRef<Path>) -> Result<ThresholdsFile> {
    let file: ThresholdsFile = from_json(&read_file(path.as_ref())?)?;
    if file.schema != THRESHOLDS_SCHEMA {
        return Err(Error::schema("schema", format!("expected {THRESHOLDS_SCHEMA}, found {}", file.schema)));
    }
    for (i, t) in file.thresholds.iter().enumerate() {
        if !(0.0..=1.0).contains(&t.s_star) {
            return Err(Error::schema(format!("thresholds[{i}].s_star"), format!("{} outside [0, 1]", t.s_star)));
        }
    }
    Ok(file)
}
