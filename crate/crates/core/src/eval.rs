//! Whole-dataset evaluation: one row per class plus a summary row.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap::{ap, coco_taus, rp_curve_single_class, ApVariant};
use crate::error::{Error, Result};
use crate::ids::ClassId;
use crate::matching::{validate_tau, Detection, GroundTruth};
use crate::olrp::{
    partition_by_class, sweep_single_class, validate_eval_tau, ScoreGrid, SweepResult, DEFAULT_GRID_STEP,
    DEFAULT_TAU,
};

pub const REPORT_SCHEMA: &str = "lrp_report_v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: ClassId,
    pub name: String,
}

impl Category {
    pub fn new(id: ClassId, name: impl Into<String>) -> Self {
        Self {
            id,
            name: name.into(),
        }
    }

    /// `class_<id>`, for sources that carry no names.
    pub fn unnamed(id: ClassId) -> Self {
        Self::new(id, format!("class_{id}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// IoU threshold of the Optimal LRP sweep and of the per-variant AP columns.
    pub tau: f64,
    /// IoU thresholds averaged into each class's `ap` and into mAP.
    pub taus: Vec<f64>,
    pub ap_variant: ApVariant,
    pub grid_step: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            taus: coco_taus(),
            ap_variant: ApVariant::default(),
            grid_step: DEFAULT_GRID_STEP,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<ScoreGrid> {
        validate_eval_tau(self.tau)?;
        for &t in &self.taus {
            validate_tau(t)?;
        }
        if self.taus.is_empty() {
            return Err(Error::schema("taus", "at least one IoU threshold is required"));
        }
        ScoreGrid::new(self.grid_step)
    }
}

/// Per-class results. Optimal LRP fields are `None` when the class has
/// neither ground truths nor detections; AP fields when it has no ground truths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class_id: ClassId,
    pub class_name: String,
    pub n_gt: usize,
    pub n_det: usize,
    pub olrp: Option<f64>,
    pub olrp_iou: Option<f64>,
    pub olrp_fp: Option<f64>,
    pub olrp_fn: Option<f64>,
    pub s_star: Option<f64>,
    pub ap_continuous: Option<f64>,
    pub ap_pascal11: Option<f64>,
    pub ap_coco101: Option<f64>,
    /// The configured variant averaged over `taus`.
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub molrp: f64,
    pub molrp_iou: Option<f64>,
    pub molrp_fp: Option<f64>,
    pub molrp_fn: Option<f64>,
    /// `None` when no class has ground truths.
    pub map: Option<f64>,
    pub s_star_min: f64,
    pub s_star_max: f64,
    pub n_classes_olrp: usize,
    pub n_classes_ap: usize,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    ((n > 0).then(|| sum / n as f64), n)
}

impl Summary {
    /// Summary of the rows; every field is a mean, min or max over them.
    pub fn from_rows(rows: &[ClassRow]) -> Result<Self> {
        let (molrp, n_classes_olrp) = mean(rows.iter().map(|r| r.olrp));
        let molrp = molrp.ok_or(Error::NothingEvaluable)?;
        let (map, n_classes_ap) = mean(rows.iter().map(|r| r.ap));
        let stars = rows.iter().filter_map(|r| r.s_star);
        Ok(Self {
            molrp,
            molrp_iou: mean(rows.iter().map(|r| r.olrp_iou)).0,
            molrp_fp: mean(rows.iter().map(|r| r.olrp_fp)).0,
            molrp_fn: mean(rows.iter().map(|r| r.olrp_fn)).0,
            map,
            s_star_min: stars.clone().fold(f64::INFINITY, f64::min),
            s_star_max: stars.fold(f64::NEG_INFINITY, f64::max),
            n_classes_olrp,
            n_classes_ap,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub config: EvalConfig,
    pub classes: Vec<ClassRow>,
    pub summary: Summary,
}

/// A report together with the sweeps behind its Optimal LRP columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub sweeps: Vec<SweepResult>,
}

/// Evaluates every listed category; inputs of other classes are ignored.
///
/// Classes are processed in parallel. Row order follows class id.
pub fn evaluate(
    gts: &[GroundTruth],
    dets: &[Detection],
    categories: &[Category],
    config: &EvalConfig,
) -> Result<Evaluation> {
    let grid = config.validate()?;
    let ids: Vec<ClassId> = categories.iter().map(|c| c.id).collect();
    let parts = partition_by_class(gts, dets, &ids);
    let rows = parts
        .par_iter()
        .map(|(&class_id, (g, d))| {
            let sweep = sweep_single_class(g, d, class_id, config.tau, &grid)?;
            let name = categories
                .iter()
                .find(|c| c.id == class_id)
                .map(|c| c.name.clone())
                .unwrap_or_default();
            let row = class_row(g, d, class_id, name, &sweep, config)?;
            Ok((row, sweep))
        })
        .collect::<Result<Vec<_>>>()?;
    let (classes, sweeps): (Vec<ClassRow>, Vec<SweepResult>) = rows.into_iter().unzip();
    let summary = Summary::from_rows(&classes)?;
    Ok(Evaluation {
        report: EvalReport {
            schema: REPORT_SCHEMA.to_string(),
            config: config.clone(),
            classes,
            summary,
        },
        sweeps,
    })
}

fn class_row(
    gts: &[GroundTruth],
    dets: &[Detection],
    class_id: ClassId,
    class_name: String,
    sweep: &SweepResult,
    config: &EvalConfig,
) -> Result<ClassRow> {
    let mut row = ClassRow {
        class_id,
        class_name,
        n_gt: sweep.n_gt,
        n_det: sweep.n_det,
        olrp: sweep.olrp(),
        olrp_iou: sweep.olrp_iou(),
        olrp_fp: sweep.olrp_fp(),
        olrp_fn: sweep.olrp_fn(),
        s_star: sweep.s_star(),
        ap_continuous: None,
        ap_pascal11: None,
        ap_coco101: None,
        ap: None,
    };
    if sweep.n_gt == 0 {
        return Ok(row);
    }
    let curve = rp_curve_single_class(gts, dets, class_id, config.tau)?;
    row.ap_continuous = Some(ap(&curve, ApVariant::Continuous));
    row.ap_pascal11 = Some(ap(&curve, ApVariant::Pascal11));
    row.ap_coco101 = Some(ap(&curve, ApVariant::Coco101));
    let mut total = 0.0;
    for &tau in &config.taus {
        total += ap(&rp_curve_single_class(gts, dets, class_id, tau)?, config.ap_variant);
    }
    row.ap = Some(total / config.taus.len() as f64);
    Ok(row)
}

/// Sweeps of every listed class at each IoU threshold, grouped by threshold.
pub fn sweeps_over_taus(
    gts: &[GroundTruth],
    dets: &[Detection],
    categories: &[Category],
    taus: &[f64],
    grid: &ScoreGrid,
) -> Result<Vec<SweepResult>> {
    let ids: Vec<ClassId> = categories.iter().map(|c| c.id).collect();
    let parts = partition_by_class(gts, dets, &ids);
    let mut out = Vec::new();
    for &tau in taus {
        validate_eval_tau(tau)?;
        let sweeps = parts
            .par_iter()
            .map(|(&c, (g, d))| sweep_single_class(g, d, c, tau, grid))
            .collect::<Result<Vec<_>>>()?;
        out.extend(sweeps);
    }
    Ok(out)
}

/// One metric of one class (or of the summary when `class_id` is `None`)
/// under two evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub class_id: Option<ClassId>,
    pub class_name: String,
    pub metric: String,
    pub left: Option<f64>,
    pub right: Option<f64>,
}

impl ComparisonEntry {
    /// `right - left` where both are present.
    pub fn delta(&self) -> Option<f64> {
        Some(self.right? - self.left?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub left_label: String,
    pub right_label: String,
    pub entries: Vec<ComparisonEntry>,
}

impl Comparison {
    pub fn get(&self, class_id: Option<ClassId>, metric: &str) -> Option<&ComparisonEntry> {
        self.entries
            .iter()
            .find(|e| e.class_id == class_id && e.metric == metric)
    }
}

fn row_metrics(r: &ClassRow) -> [(&'static str, Option<f64>); 6] {
    [
        ("olrp", r.olrp),
        ("olrp_iou", r.olrp_iou),
        ("olrp_fp", r.olrp_fp),
        ("olrp_fn", r.olrp_fn),
        ("s_star", r.s_star),
        ("ap", r.ap),
    ]
}

fn summary_metrics(s: &Summary) -> [(&'static str, Option<f64>); 7] {
    [
        ("molrp", Some(s.molrp)),
        ("molrp_iou", s.molrp_iou),
        ("molrp_fp", s.molrp_fp),
        ("molrp_fn", s.molrp_fn),
        ("map", s.map),
        ("s_star_min", Some(s.s_star_min)),
        ("s_star_max", Some(s.s_star_max)),
    ]
}

/// Side-by-side view of two reports, class by class then the summary.
///
/// A class present in only one report appears with the other side `None`.
pub fn compare(
    left: &EvalReport,
    right: &EvalReport,
    left_label: impl Into<String>,
    right_label: impl Into<String>,
) -> Comparison {
    let mut ids: Vec<ClassId> = left.classes.iter().chain(&right.classes).map(|r| r.class_id).collect();
    ids.sort();
    ids.dedup();
    fn find(rep: &EvalReport, id: ClassId) -> Option<&ClassRow> {
        rep.classes.iter().find(|r| r.class_id == id)
    }
    let mut entries = Vec::new();
    for id in ids {
        let (l, r) = (find(left, id), find(right, id));
        let name = l.or(r).map(|x| x.class_name.clone()).unwrap_or_default();
        let lm = l.map(row_metrics);
        let rm = r.map(row_metrics);
        for k in 0..6 {
            let metric = lm.as_ref().or(rm.as_ref()).unwrap()[k].0;
            entries.push(ComparisonEntry {
                class_id: Some(id),
                class_name: name.clone(),
                metric: metric.to_string(),
                left: lm.as_ref().and_then(|m| m[k].1),
                right: rm.as_ref().and_then(|m| m[k].1),
            });
        }
    }
    let (ls, rs) = (summary_metrics(&left.summary), summary_metrics(&right.summary));
    for k in 0..ls.len() {
        entries.push(ComparisonEntry {
            class_id: None,
            class_name: "all".to_string(),
            metric: ls[k].0.to_string(),
            left: ls[k].1,
            right: rs[k].1,
        });
    }
    Comparison {
        left_label: left_label.into(),
        right_label: right_label.into(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use crate::ids::ImageId;

    fn bx(x: f64) -> BoundingBox {
        BoundingBox::from_xywh(x, 0.0, 10.0, 10.0).unwrap()
    }

    fn fixture() -> (Vec<GroundTruth>, Vec<Detection>, Vec<Category>) {
        let gts = vec![
            GroundTruth::new(ImageId(0), ClassId(1), bx(0.0)),
            GroundTruth::new(ImageId(0), ClassId(1), bx(20.0)),
            GroundTruth::new(ImageId(1), ClassId(2), bx(0.0)),
        ];
        let dets = vec![
            Detection::new(ImageId(0), ClassId(1), bx(0.0), 0.9).unwrap(),
            Detection::new(ImageId(0), ClassId(1), bx(20.0), 0.8).unwrap(),
            Detection::new(ImageId(1), ClassId(3), bx(50.0), 0.4).unwrap(),
        ];
        let cats = vec![
            Category::new(ClassId(1), "person"),
            Category::new(ClassId(2), "car"),
            Category::new(ClassId(3), "dog"),
            Category::new(ClassId(4), "cat"),
        ];
        (gts, dets, cats)
    }

    #[test]
    fn rows_and_summary() {
        let (gts, dets, cats) = fixture();
        let ev = evaluate(&gts, &dets, &cats, &EvalConfig::default()).unwrap();
        let rows = &ev.report.classes;
        assert_eq!(rows.len(), 4);

        let person = &rows[0];
        assert_eq!((person.olrp, person.s_star, person.ap), (Some(0.0), Some(0.8), Some(1.0)));

        // ground truths but no detections
        let car = &rows[1];
        assert_eq!((car.olrp, car.s_star, car.ap), (Some(1.0), Some(0.0), Some(0.0)));
        assert_eq!((car.olrp_iou, car.olrp_fp, car.olrp_fn), (None, None, Some(1.0)));

        // detections only: Optimal LRP is 1, AP undefined
        let dog = &rows[2];
        assert_eq!((dog.olrp, dog.ap), (Some(1.0), None));

        let cat = &rows[3];
        assert_eq!((cat.olrp, cat.ap), (None, None));

        let s = &ev.report.summary;
        assert!((s.molrp - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((s.map, s.n_classes_olrp, s.n_classes_ap), (Some(0.5), 3, 2));
        assert_eq!((s.s_star_min, s.s_star_max), (0.0, 0.8));
        assert_eq!(Summary::from_rows(rows).unwrap(), *s);
    }

    #[test]
    fn nothing_evaluable() {
        let cats = vec![Category::unnamed(ClassId(7))];
        assert!(matches!(
            evaluate(&[], &[], &cats, &EvalConfig::default()),
            Err(Error::NothingEvaluable)
        ));
    }

    #[test]
    fn config_validation() {
        let (gts, dets, cats) = fixture();
        let bad = [
            EvalConfig { tau: 1.0, ..Default::default() },
            EvalConfig { taus: vec![], ..Default::default() },
            EvalConfig { grid_step: 0.3, ..Default::default() },
        ];
        for c in bad {
            assert!(evaluate(&gts, &dets, &cats, &c).is_err());
        }
    }

    #[test]
    fn comparison_entries() {
        let (gts, dets, cats) = fixture();
        let a = evaluate(&gts, &dets, &cats, &EvalConfig::default()).unwrap().report;
        let b = evaluate(&gts, &dets[..1], &cats, &EvalConfig::default()).unwrap().report;
        let c = compare(&a, &b, "full", "first");
        let e = c.get(Some(ClassId(1)), "olrp").unwrap();
        assert_eq!((e.left, e.right), (Some(0.0), Some(0.5)));
        assert_eq!(e.delta(), Some(0.5));
        assert!(c.get(None, "molrp").is_some());
        assert_eq!(c.entries.len(), 4 * 6 + 7);
    }
}
