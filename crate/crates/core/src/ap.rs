//! Average precision from recall-precision curves.
//!
//! The curve has one point per evaluated detection in descending score
//! order, built from cumulative TP/FP counts of a single greedy matching.
//! That is the same set of points a threshold sweep through every distinct
//! score produces, without re-matching at each threshold.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::ClassId;
use crate::matching::{greedy_trace, validate_tau, Detection, GroundTruth, Outcome};
use crate::olrp::partition_by_class;

/// COCO's IoU thresholds `0.50:0.05:0.95`.
pub fn coco_taus() -> Vec<f64> {
    (0..10).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpPoint {
    pub recall: f64,
    pub precision: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpCurve {
    pub class_id: ClassId,
    pub tau: f64,
    pub n_gt: usize,
    pub points: Vec<RpPoint>,
    /// `interpolated_precision[i]` is the largest precision at or after point `i`.
    pub interpolated_precision: Vec<f64>,
}

impl RpCurve {
    /// Interpolated precision at recall `r`: the best precision reached at
    /// any recall `>= r`, or 0 when the curve never gets there.
    pub fn precision_at(&self, r: f64) -> f64 {
        let i = self.points.partition_point(|p| p.recall < r);
        self.interpolated_precision.get(i).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApVariant {
    /// Exact area under the interpolated step curve.
    Continuous,
    /// Mean interpolated precision at recall 0.0, 0.1, ..., 1.0.
    Pascal11,
    /// Mean interpolated precision at recall 0.00, 0.01, ..., 1.00.
    #[default]
    Coco101,
}

impl ApVariant {
    pub const ALL: [ApVariant; 3] = [ApVariant::Continuous, ApVariant::Pascal11, ApVariant::Coco101];

    pub fn name(&self) -> &'static str {
        match self {
            ApVariant::Continuous => "continuous",
            ApVariant::Pascal11 => "pascal11",
            ApVariant::Coco101 => "coco101",
        }
    }
}

impl fmt::Display for ApVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ApVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ApVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown AP variant `{s}` (expected continuous, pascal11 or coco101)"))
    }
}

pub fn rp_curve(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_id: ClassId,
    tau: f64,
) -> Result<RpCurve> {
    let gts: Vec<GroundTruth> = gts.iter().filter(|g| g.class_id == class_id).cloned().collect();
    let dets: Vec<Detection> = dets.iter().filter(|d| d.class_id == class_id).cloned().collect();
    rp_curve_single_class(&gts, &dets, class_id, tau)
}

pub(crate) fn rp_curve_single_class(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_id: ClassId,
    tau: f64,
) -> Result<RpCurve> {
    validate_tau(tau)?;
    let trace = greedy_trace(gts, dets, tau)?;
    if trace.n_gt == 0 {
        return Err(Error::NoGroundTruth(class_id));
    }
    let n_gt = trace.n_gt as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        match step.outcome {
            Outcome::Tp { .. } => tp += 1,
            Outcome::Fp => fp += 1,
            Outcome::Ignored => continue,
        }
        points.push(RpPoint {
            recall: tp as f64 / n_gt,
            precision: tp as f64 / (tp + fp) as f64,
            score: step.score,
        });
    }
    let mut interpolated_precision: Vec<f64> = points.iter().map(|p| p.precision).collect();
    for i in (0..interpolated_precision.len().saturating_sub(1)).rev() {
        interpolated_precision[i] = interpolated_precision[i].max(interpolated_precision[i + 1]);
    }
    Ok(RpCurve {
        class_id,
        tau,
        n_gt: trace.n_gt,
        points,
        interpolated_precision,
    })
}

fn sampled(curve: &RpCurve, intervals: usize) -> f64 {
    let total: f64 = (0..=intervals)
        .map(|k| curve.precision_at(k as f64 / intervals as f64))
        .sum();
    total / (intervals + 1) as f64
}

pub fn ap(curve: &RpCurve, variant: ApVariant) -> f64 {
    match variant {
        ApVariant::Continuous => {
            let mut area = 0.0;
            let mut prev_recall = 0.0;
            for (p, &ip) in curve.points.iter().zip(&curve.interpolated_precision) {
                area += (p.recall - prev_recall) * ip;
                prev_recall = p.recall;
            }
            area
        }
        ApVariant::Pascal11 => sampled(curve, 10),
        ApVariant::Coco101 => sampled(curve, 100),
    }
}

/// AP averaged over classes and IoU thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub variant: ApVariant,
    pub taus: Vec<f64>,
    /// One AP per entry of `taus`, per class with ground truths.
    pub per_class: BTreeMap<ClassId, Vec<f64>>,
    /// Classes without ground truths; their AP is undefined.
    pub excluded: Vec<ClassId>,
    pub map: f64,
}

impl MapReport {
    /// Mean over `taus` for one class.
    pub fn class_mean(&self, class_id: ClassId) -> Option<f64> {
        self.per_class
            .get(&class_id)
            .map(|aps| aps.iter().sum::<f64>() / aps.len() as f64)
    }
}

/// Mean of COCO 101-point AP over the classes and IoU thresholds given.
pub fn map_over_taus(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_ids: &[ClassId],
    taus: &[f64],
) -> Result<MapReport> {
    map_over_taus_with(gts, dets, class_ids, taus, ApVariant::Coco101)
}

pub fn map_over_taus_with(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_ids: &[ClassId],
    taus: &[f64],
    variant: ApVariant,
) -> Result<MapReport> {
    for &tau in taus {
        validate_tau(tau)?;
    }
    let parts = partition_by_class(gts, dets, class_ids);
    let rows = parts
        .par_iter()
        .map(|(&c, (g, d))| {
            let aps = taus
                .iter()
                .map(|&tau| rp_curve_single_class(g, d, c, tau).map(|curve| ap(&curve, variant)))
                .collect::<Result<Vec<f64>>>();
            (c, aps)
        })
        .collect::<Vec<_>>();
    map_from_rows(variant, taus, rows)
}

pub(crate) fn map_from_rows(
    variant: ApVariant,
    taus: &[f64],
    rows: Vec<(ClassId, Result<Vec<f64>>)>,
) -> Result<MapReport> {
    let mut per_class = BTreeMap::new();
    let mut excluded = Vec::new();
    for (c, aps) in rows {
        match aps {
            Ok(aps) => {
                per_class.insert(c, aps);
            }
            Err(Error::NoGroundTruth(_)) => excluded.push(c),
            Err(e) => return Err(e),
        }
    }
    if per_class.is_empty() || taus.is_empty() {
        return Err(Error::NothingEvaluable);
    }
    let n = (per_class.len() * taus.len()) as f64;
    let map = per_class.values().flatten().sum::<f64>() / n;
    Ok(MapReport {
        variant,
        taus: taus.to_vec(),
        per_class,
        excluded,
        map,
    })
}
