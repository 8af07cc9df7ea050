//! Localization-Recall-Precision (LRP) error, Optimal LRP and Average
//! Precision for object detection.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: boxes, IoU and the `1 - IoU` distance.
//! - [`matching`]: greedy evaluation matching, the Hungarian solver and
//!   optimal set matching.
//! - [`lrp`]: LRP and its components, and the DASA set distance.
//! - [`olrp`]: score-threshold sweeps, Optimal LRP and its class mean.
//! - [`ap`]: recall-precision curves and AP variants.
//! - [`video`]: frame-to-frame linking with Bayesian score updates.
//! - [`dataio`]: COCO ingestion, reports, curve exports and stream fixtures.
//! - [`eval`]: whole-dataset evaluation tying the above together.
//! - [`synth`]: deterministic synthetic fixtures.

pub mod ap;
pub mod dataio;
mod error;
pub mod eval;
pub mod geometry;
mod ids;
pub mod lrp;
pub mod matching;
pub mod olrp;
pub mod synth;
pub mod video;

pub use error::{Error, Result};
pub use geometry::BoundingBox;
pub use ids::{ClassId, ImageId};
pub use lrp::LrpBreakdown;
pub use matching::{Detection, GroundTruth, MatchResult};
