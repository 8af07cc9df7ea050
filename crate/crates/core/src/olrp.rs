//! Optimal LRP: the minimum LRP over a grid of score thresholds.
//!
//! For each grid value `s` the detections with `score >= s` form `Y_s`. The
//! greedy matching of `Y_s` is a prefix of the matching of all detections, so
//! one pass of the matcher per class yields every grid sample.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::ClassId;
use crate::lrp::LrpBreakdown;
use crate::matching::{greedy_trace, Detection, GroundTruth, Outcome};

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_GRID_STEP: f64 = 0.01;
/// Largest IoU threshold accepted by evaluation paths.
pub const MAX_EVAL_TAU: f64 = 0.999;

pub(crate) fn validate_eval_tau(tau: f64) -> Result<()> {
    if (0.0..=MAX_EVAL_TAU).contains(&tau) {
        Ok(())
    } else {
        Err(Error::TauOutOfEvaluationRange(tau))
    }
}

/// Evenly spaced score thresholds `k / n` for `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreGrid {
    intervals: usize,
}

impl Default for ScoreGrid {
    fn default() -> Self {
        Self { intervals: 100 }
    }
}

impl ScoreGrid {
    /// `step` must split `[0, 1]` into a whole number of intervals.
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidGridStep(step));
        }
        let n = (1.0 / step).round();
        if (n * step - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGridStep(step));
        }
        Ok(Self {
            intervals: n as usize,
        })
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Division rather than accumulation, so that `0.7` on the grid is the literal `0.7`.
    pub fn point(&self, k: usize) -> f64 {
        k as f64 / self.intervals as f64
    }

    pub fn points(&self) -> impl DoubleEndedIterator<Item = f64> + '_ {
        (0..=self.intervals).map(|k| self.point(k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub s: f64,
    /// `None` where LRP is undefined (no ground truths and nothing retained).
    pub breakdown: Option<LrpBreakdown>,
    /// `|Y_s|` including detections absorbed by ignore regions.
    pub retained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptimum {
    pub s_star: f64,
    pub breakdown: LrpBreakdown,
}

/// LRP over the score grid for one class, with its minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub class_id: ClassId,
    pub tau: f64,
    pub n_gt: usize,
    pub n_det: usize,
    pub samples: Vec<SweepSample>,
    /// `None` when the class has neither ground truths nor detections.
    pub optimum: Option<SweepOptimum>,
}

impl SweepResult {
    pub fn is_evaluable(&self) -> bool {
        self.optimum.is_some()
    }

    pub fn olrp(&self) -> Option<f64> {
        self.optimum.as_ref().map(|o| o.breakdown.total)
    }

    pub fn s_star(&self) -> Option<f64> {
        self.optimum.as_ref().map(|o| o.s_star)
    }

    pub fn olrp_iou(&self) -> Option<f64> {
        self.optimum.as_ref().and_then(|o| o.breakdown.loc)
    }

    pub fn olrp_fp(&self) -> Option<f64> {
        self.optimum.as_ref().and_then(|o| o.breakdown.fp)
    }

    pub fn olrp_fn(&self) -> Option<f64> {
        self.optimum.as_ref().and_then(|o| o.breakdown.fn_)
    }

    pub fn defined_samples(&self) -> impl Iterator<Item = (f64, &LrpBreakdown)> {
        self.samples
            .iter()
            .filter_map(|s| s.breakdown.as_ref().map(|b| (s.s, b)))
    }
}

/// Sweep for one class over the default 0.01 grid.
pub fn sweep_class(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_id: ClassId,
    tau: f64,
) -> Result<SweepResult> {
    sweep_class_on_grid(gts, dets, class_id, tau, &ScoreGrid::default())
}

pub fn sweep_class_on_grid(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_id: ClassId,
    tau: f64,
    grid: &ScoreGrid,
) -> Result<SweepResult> {
    let gts: Vec<GroundTruth> = gts.iter().filter(|g| g.class_id == class_id).cloned().collect();
    let dets: Vec<Detection> = dets.iter().filter(|d| d.class_id == class_id).cloned().collect();
    sweep_single_class(&gts, &dets, class_id, tau, grid)
}

/// Sweep where every input is already known to belong to `class_id`.
pub(crate) fn sweep_single_class(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_id: ClassId,
    tau: f64,
    grid: &ScoreGrid,
) -> Result<SweepResult> {
    validate_eval_tau(tau)?;
    let trace = greedy_trace(gts, dets, tau)?;

    // running counts after each processed detection; index 0 is the empty prefix
    let n = trace.steps.len();
    let mut tp = Vec::with_capacity(n + 1);
    let mut fp = Vec::with_capacity(n + 1);
    let mut loc = Vec::with_capacity(n + 1);
    let (mut t, mut f, mut l) = (0usize, 0usize, 0.0f64);
    tp.push(t);
    fp.push(f);
    loc.push(l);
    for step in &trace.steps {
        match step.outcome {
            Outcome::Tp { iou, .. } => {
                t += 1;
                l += 1.0 - iou;
            }
            Outcome::Fp => f += 1,
            Outcome::Ignored => {}
        }
        tp.push(t);
        fp.push(f);
        loc.push(l);
    }

    let mut samples = Vec::with_capacity(grid.len());
    let mut last: Option<(usize, Option<LrpBreakdown>)> = None;
    for s in grid.points() {
        let len = trace.prefix_len(s);
        let breakdown = match &last {
            Some((prev_len, b)) if *prev_len == len => b.clone(),
            _ => {
                let b = match LrpBreakdown::from_parts(tp[len], fp[len], trace.n_gt - tp[len], loc[len], tau) {
                    Ok(b) => Some(b),
                    Err(Error::UndefinedLrp) => None,
                    Err(e) => return Err(e),
                };
                last = Some((len, b.clone()));
                b
            }
        };
        samples.push(SweepSample {
            s,
            breakdown,
            retained: len,
        });
    }

    let optimum = if dets.is_empty() && trace.n_gt > 0 {
        // nothing to threshold: report the permissive end of the grid
        samples[0].breakdown.clone().map(|breakdown| SweepOptimum {
            s_star: samples[0].s,
            breakdown,
        })
    } else {
        let mut best: Option<&SweepSample> = None;
        for sample in &samples {
            if let Some(b) = &sample.breakdown {
                // `<=` keeps the largest s among equal minima
                if best.map_or(true, |cur| b.total <= cur.breakdown.as_ref().unwrap().total) {
                    best = Some(sample);
                }
            }
        }
        best.map(|sample| SweepOptimum {
            s_star: sample.s,
            breakdown: sample.breakdown.clone().unwrap(),
        })
    };

    Ok(SweepResult {
        class_id,
        tau,
        n_gt: trace.n_gt,
        n_det: dets.len(),
        samples,
        optimum,
    })
}

/// Mean Optimal LRP over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoLrpReport {
    pub tau: f64,
    pub per_class: BTreeMap<ClassId, SweepResult>,
    /// Classes with neither ground truths nor detections.
    pub excluded: Vec<ClassId>,
    pub molrp: f64,
    /// Mean over the classes whose component is defined at their optimum.
    pub molrp_iou: Option<f64>,
    pub molrp_fp: Option<f64>,
    pub molrp_fn: Option<f64>,
    pub s_star_min: f64,
    pub s_star_max: f64,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = values
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Splits flat inputs into per-class vectors for the requested classes.
pub(crate) fn partition_by_class(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_ids: &[ClassId],
) -> BTreeMap<ClassId, (Vec<GroundTruth>, Vec<Detection>)> {
    let mut parts: BTreeMap<ClassId, (Vec<GroundTruth>, Vec<Detection>)> =
        class_ids.iter().map(|&c| (c, Default::default())).collect();
    for g in gts {
        if let Some(p) = parts.get_mut(&g.class_id) {
            p.0.push(g.clone());
        }
    }
    for d in dets {
        if let Some(p) = parts.get_mut(&d.class_id) {
            p.1.push(d.clone());
        }
    }
    parts
}

pub(crate) fn molrp_from_sweeps(tau: f64, sweeps: Vec<SweepResult>) -> Result<MoLrpReport> {
    let mut per_class = BTreeMap::new();
    let mut excluded = Vec::new();
    for sweep in sweeps {
        if sweep.is_evaluable() {
            per_class.insert(sweep.class_id, sweep);
        } else {
            excluded.push(sweep.class_id);
        }
    }
    if per_class.is_empty() {
        return Err(Error::NothingEvaluable);
    }
    let count = per_class.len() as f64;
    let molrp = per_class.values().map(|s| s.olrp().unwrap()).sum::<f64>() / count;
    let stars = per_class.values().map(|s| s.s_star().unwrap());
    let s_star_min = stars.clone().fold(f64::INFINITY, f64::min);
    let s_star_max = stars.fold(f64::NEG_INFINITY, f64::max);
    Ok(MoLrpReport {
        tau,
        molrp,
        molrp_iou: mean_defined(per_class.values().map(SweepResult::olrp_iou)),
        molrp_fp: mean_defined(per_class.values().map(SweepResult::olrp_fp)),
        molrp_fn: mean_defined(per_class.values().map(SweepResult::olrp_fn)),
        s_star_min,
        s_star_max,
        per_class,
        excluded,
    })
}

/// Optimal LRP per class and its mean over the evaluable classes.
pub fn molrp(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_ids: &[ClassId],
    tau: f64,
) -> Result<MoLrpReport> {
    molrp_on_grid(gts, dets, class_ids, tau, &ScoreGrid::default())
}

pub fn molrp_on_grid(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_ids: &[ClassId],
    tau: f64,
    grid: &ScoreGrid,
) -> Result<MoLrpReport> {
    validate_eval_tau(tau)?;
    let parts = partition_by_class(gts, dets, class_ids);
    let sweeps = parts
        .par_iter()
        .map(|(&c, (g, d))| sweep_single_class(g, d, c, tau, grid))
        .collect::<Result<Vec<_>>>()?;
    molrp_from_sweeps(tau, sweeps)
}

/// `oLRP@tau` for each requested IoU threshold.
pub fn olrp_at_tau_sweep(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_id: ClassId,
    taus: &[f64],
) -> Result<Vec<(f64, SweepResult)>> {
    let gts: Vec<GroundTruth> = gts.iter().filter(|g| g.class_id == class_id).cloned().collect();
    let dets: Vec<Detection> = dets.iter().filter(|d| d.class_id == class_id).cloned().collect();
    taus.iter()
        .map(|&tau| {
            sweep_single_class(&gts, &dets, class_id, tau, &ScoreGrid::default()).map(|s| (tau, s))
        })
        .collect()
}
