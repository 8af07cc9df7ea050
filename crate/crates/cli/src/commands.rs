use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use lrp_core::dataio::{
    load_detections, load_ground_truth, load_stream, load_thresholds, round_decimals, write_comparison,
    write_curves, write_report, Dataset, Format, ThresholdsFile,
};
use lrp_core::eval::{compare, evaluate, sweeps_over_taus, Category, EvalConfig, EvalReport};
use lrp_core::olrp::{molrp_on_grid, ScoreGrid};
use lrp_core::video::{run_stream, LinkParams, StreamOutput, Thresholds};
use lrp_core::{ClassId, Detection, Error, Result};
use serde::Serialize;

use crate::args::{
    CompareArgs, Command, CurvesArgs, EvalArgs, InputArgs, MetricArgs, StreamArgs, SweepArgs, ThresholdsArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Curves(a) => cmd_curves(a),
        Command::Thresholds(a) => cmd_thresholds(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Stream(a) => cmd_stream(a),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        return Ok(());
    }
    Err(Error::Io(io::Error::new(
        io::ErrorKind::NotFound,
        format!("{}: no such file", path.display()),
    )))
}

fn require_output_dir(path: Option<&PathBuf>) -> Result<()> {
    let Some(dir) = path.and_then(|p| p.parent()).filter(|d| !d.as_os_str().is_empty()) else {
        return Ok(());
    };
    if dir.is_dir() {
        return Ok(());
    }
    Err(Error::Io(io::Error::new(
        io::ErrorKind::NotFound,
        format!("{}: output directory does not exist", dir.display()),
    )))
}

/// Everything is rendered to memory first, so a failed run leaves no partial file.
fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn load_inputs(input: &InputArgs, extra_dets: Option<&Path>) -> Result<(Dataset, Vec<Detection>)> {
    require_file(&input.gt)?;
    require_file(&input.dets)?;
    if let Some(p) = extra_dets {
        require_file(p)?;
    }
    let dataset = load_ground_truth(&input.gt)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    let dets = load_detections(&input.dets, &dataset)?;
    eprintln!(
        "loaded {} images, {} categories, {} ground truths, {} detections",
        dataset.images.len(),
        dataset.categories.len(),
        dataset.ground_truths.len(),
        dets.len()
    );
    Ok((dataset, dets))
}

fn config(m: &MetricArgs) -> EvalConfig {
    EvalConfig {
        tau: m.tau,
        taus: m.taus.0.clone(),
        ap_variant: m.ap_variant,
        grid_step: m.grid_step,
    }
}

fn warn_missing_detections(report: &EvalReport) {
    for row in &report.classes {
        if row.n_gt > 0 && row.n_det == 0 {
            eprintln!(
                "warning: class {} ({}) has {} ground truths and no detections; s* = 0.00, oLRP = 1",
                row.class_id, row.class_name, row.n_gt
            );
        }
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    require_output_dir(a.output.output.as_ref())?;
    let (ds, dets) = load_inputs(&a.input, None)?;
    let ev = evaluate(&ds.ground_truths, &dets, &ds.categories, &config(&a.metric))?;
    warn_missing_detections(&ev.report);
    let mut buf = Vec::new();
    write_report(&ev.report, a.output.format, &mut buf)?;
    emit(a.output.output.as_ref(), &buf)
}

#[derive(Serialize)]
struct SweepRow {
    class_id: Option<ClassId>,
    tau: f64,
    olrp: Option<f64>,
    olrp_iou: Option<f64>,
    olrp_fp: Option<f64>,
    olrp_fn: Option<f64>,
    s_star: Option<f64>,
}

#[derive(Serialize)]
struct SweepDocument {
    schema: &'static str,
    rows: Vec<SweepRow>,
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    require_output_dir(a.output.output.as_ref())?;
    let (ds, dets) = load_inputs(&a.input, None)?;
    let grid = ScoreGrid::new(a.grid_step)?;
    let ids: Vec<ClassId> = ds.categories.iter().map(|c| c.id).collect();
    let r = |v: Option<f64>| v.map(round_decimals);
    let mut rows = Vec::new();
    for &tau in &a.taus.0 {
        let report = molrp_on_grid(&ds.ground_truths, &dets, &ids, tau, &grid)?;
        for sweep in report.per_class.values() {
            rows.push(SweepRow {
                class_id: Some(sweep.class_id),
                tau,
                olrp: r(sweep.olrp()),
                olrp_iou: r(sweep.olrp_iou()),
                olrp_fp: r(sweep.olrp_fp()),
                olrp_fn: r(sweep.olrp_fn()),
                s_star: r(sweep.s_star()),
            });
        }
        rows.push(SweepRow {
            class_id: None,
            tau,
            olrp: r(Some(report.molrp)),
            olrp_iou: r(report.molrp_iou),
            olrp_fp: r(report.molrp_fp),
            olrp_fn: r(report.molrp_fn),
            s_star: None,
        });
    }
    let mut buf = Vec::new();
    match a.output.format {
        Format::Json => {
            let doc = SweepDocument {
                schema: "lrp_sweep_v1",
                rows,
            };
            serde_json::to_writer_pretty(&mut buf, &doc).map_err(|e| Error::Io(e.into()))?;
            buf.push(b'\n');
        }
        Format::Csv => {
            let f = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
            writeln!(buf, "class_id,tau,olrp,olrp_iou,olrp_fp,olrp_fn,s_star")?;
            for row in rows {
                let class = row.class_id.map_or_else(|| "all".to_string(), |c| c.to_string());
                writeln!(
                    buf,
                    "{class},{:.4},{},{},{},{},{}",
                    row.tau,
                    f(row.olrp),
                    f(row.olrp_iou),
                    f(row.olrp_fp),
                    f(row.olrp_fn),
                    f(row.s_star)
                )?;
            }
        }
    }
    emit(a.output.output.as_ref(), &buf)
}

fn cmd_curves(a: CurvesArgs) -> Result<()> {
    require_output_dir(a.output.as_ref())?;
    let (ds, dets) = load_inputs(&a.input, None)?;
    let grid = ScoreGrid::new(a.grid_step)?;
    let taus = if a.tau_sweep { a.taus.0.clone() } else { vec![a.tau] };
    let sweeps = sweeps_over_taus(&ds.ground_truths, &dets, &ds.categories, &taus, &grid)?;
    let mut buf = Vec::new();
    let rows = write_curves(&sweeps, &mut buf)?;
    eprintln!("{rows} curve rows over {} IoU threshold(s)", taus.len());
    emit(a.output.as_ref(), &buf)
}

fn cmd_thresholds(a: ThresholdsArgs) -> Result<()> {
    require_output_dir(a.output.as_ref())?;
    let (ds, dets) = load_inputs(&a.input, None)?;
    let grid = ScoreGrid::new(a.grid_step)?;
    let ids: Vec<ClassId> = ds.categories.iter().map(|c| c.id).collect();
    let report = molrp_on_grid(&ds.ground_truths, &dets, &ids, a.tau, &grid)?;
    for sweep in report.per_class.values() {
        if sweep.n_gt > 0 && sweep.n_det == 0 {
            eprintln!(
                "warning: class {} has {} ground truths and no detections; s* = 0.00, oLRP = 1",
                sweep.class_id, sweep.n_gt
            );
        }
    }
    let sweeps: Vec<_> = report.per_class.into_values().collect();
    let mut file = ThresholdsFile::from_sweeps(a.tau, &sweeps);
    for t in &mut file.thresholds {
        t.olrp = round_decimals(t.olrp);
    }
    let mut buf = serde_json::to_vec_pretty(&file).map_err(|e| Error::Io(e.into()))?;
    buf.push(b'\n');
    emit(a.output.as_ref(), &buf)
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    require_output_dir(a.output.output.as_ref())?;
    let input = InputArgs {
        gt: a.gt,
        dets: a.dets,
    };
    let (ds, dets) = load_inputs(&input, Some(&a.dets_b))?;
    let dets_b = load_detections(&a.dets_b, &ds)?;
    let cfg = config(&a.metric);
    let left = evaluate(&ds.ground_truths, &dets, &ds.categories, &cfg)?;
    let right = evaluate(&ds.ground_truths, &dets_b, &ds.categories, &cfg)?;
    let cmp = compare(&left.report, &right.report, &a.labels[0], &a.labels[1]);
    let mut buf = Vec::new();
    write_comparison(&cmp, a.output.format, &mut buf)?;
    emit(a.output.output.as_ref(), &buf)
}

fn stream_report(
    out: &StreamOutput,
    gts: &[lrp_core::GroundTruth],
    categories: &[Category],
    tau: f64,
) -> Result<EvalReport> {
    let cfg = EvalConfig {
        tau,
        ..EvalConfig::default()
    };
    Ok(evaluate(gts, &out.detections(), categories, &cfg)?.report)
}

fn cmd_stream(a: StreamArgs) -> Result<()> {
    require_file(&a.stream)?;
    if let Some(p) = &a.thresholds {
        require_file(p)?;
    }
    require_output_dir(a.output.output.as_ref())?;
    require_output_dir(a.filtered_output.as_ref())?;

    let (frames, gts) = load_stream(&a.stream)?;
    let params = LinkParams::new(a.alpha, a.cost_cutoff)?;
    let general = Thresholds::general(a.general_threshold)?;
    let class_ids: BTreeSet<ClassId> = gts
        .iter()
        .map(|g| g.class_id)
        .chain(frames.iter().flat_map(|f| f.detections.iter().map(|d| d.class_id)))
        .collect();
    let categories: Vec<Category> = class_ids.iter().map(|&c| Category::unnamed(c)).collect();

    let per_class = match (&a.thresholds, a.derive_thresholds) {
        (Some(path), _) => Some(load_thresholds(path)?.to_thresholds(a.general_threshold)?),
        (None, true) => {
            let unfiltered = run_stream(&frames, &Thresholds::general(0.0)?, &params)?;
            let report = stream_report(&unfiltered, &gts, &categories, a.tau)?;
            let map: BTreeMap<ClassId, f64> = report
                .classes
                .iter()
                .filter_map(|r| Some((r.class_id, r.s_star?)))
                .collect();
            for (c, s) in &map {
                eprintln!("derived threshold for class {c}: {s:.2}");
            }
            Some(Thresholds::per_class(map, a.general_threshold)?)
        }
        (None, false) => None,
    };

    let g_out = run_stream(&frames, &general, &params)?;
    let g_report = stream_report(&g_out, &gts, &categories, a.tau)?;
    let mut buf = Vec::new();
    let kept = match &per_class {
        Some(th) => {
            let s_out = run_stream(&frames, th, &params)?;
            let s_report = stream_report(&s_out, &gts, &categories, a.tau)?;
            eprintln!(
                "moLRP general {:.4}, per-class {:.4}",
                g_report.summary.molrp, s_report.summary.molrp
            );
            let cmp = compare(&g_report, &s_report, "general", "per_class");
            write_comparison(&cmp, a.output.format, &mut buf)?;
            s_out
        }
        None => {
            write_report(&g_report, a.output.format, &mut buf)?;
            g_out
        }
    };
    if let Some(path) = &a.filtered_output {
        let mut bytes = serde_json::to_vec_pretty(&kept).map_err(|e| Error::Io(e.into()))?;
        bytes.push(b'\n');
        fs::write(path, bytes)?;
    }
    emit(a.output.output.as_ref(), &buf)
}
