use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lrp_core::ap::ApVariant;
use lrp_core::dataio::Format;

/// Evaluate object detectors with LRP, Optimal LRP and AP.
///
/// Exit codes: 0 success, 2 invalid input, 3 nothing to evaluate.
#[derive(Debug, Parser)]
#[command(name = "lrp", version)]
pub struct Cli {
    /// Worker threads for per-class evaluation (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full report: Optimal LRP with components and s*, AP variants, moLRP and mAP.
    Eval(EvalArgs),
    /// Optimal LRP per class at each IoU threshold of --taus.
    Sweep(SweepArgs),
    /// Long-format LRP and recall-precision table along the score grid.
    Curves(CurvesArgs),
    /// Per-class optimal score thresholds s*, for use with `stream`.
    Thresholds(ThresholdsArgs),
    /// Two detection files evaluated against the same ground truth, side by side.
    Compare(CompareArgs),
    /// Link, rescore and filter a video stream, then evaluate the result.
    Stream(StreamArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// COCO annotation file.
    #[arg(long)]
    pub gt: PathBuf,
    /// COCO results file (array of image_id, category_id, bbox, score).
    #[arg(long)]
    pub dets: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// json or csv.
    #[arg(long, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// IoU threshold of the Optimal LRP sweep.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// IoU thresholds averaged into AP, as start:step:end or a comma list.
    #[arg(long, default_value = "0.5:0.05:0.95", value_parser = parse_taus)]
    pub taus: Taus,
    /// AP interpolation: continuous, pascal11 or coco101.
    #[arg(long, default_value_t = ApVariant::Coco101)]
    pub ap_variant: ApVariant,
    /// Spacing of the score-threshold grid.
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// IoU thresholds, as start:step:end or a comma list.
    #[arg(long, default_value = "0.5:0.05:0.95", value_parser = parse_taus)]
    pub taus: Taus,
    /// Spacing of the score-threshold grid.
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// IoU threshold of the curves.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Emit one block per IoU threshold of --taus instead of --tau.
    #[arg(long)]
    pub tau_sweep: bool,
    /// IoU thresholds used with --tau-sweep.
    #[arg(long, default_value = "0.5:0.05:0.95", value_parser = parse_taus)]
    pub taus: Taus,
    /// Spacing of the score-threshold grid.
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Write here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// IoU threshold of the Optimal LRP sweep.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Spacing of the score-threshold grid.
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Write here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// COCO annotation file.
    #[arg(long)]
    pub gt: PathBuf,
    /// First COCO results file.
    #[arg(long)]
    pub dets: PathBuf,
    /// Second COCO results file.
    #[arg(long)]
    pub dets_b: PathBuf,
    /// Column labels of the two files.
    #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"], default_values = ["a", "b"])]
    pub labels: Vec<String>,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Stream fixture: {"frames": [{"frame_index", "detections", "ground_truths"}]}.
    #[arg(long)]
    pub stream: PathBuf,
    /// Per-class thresholds file written by `lrp thresholds`.
    #[arg(long, conflicts_with = "derive_thresholds")]
    pub thresholds: Option<PathBuf>,
    /// Take per-class thresholds from the Optimal LRP of the rescored, unfiltered stream.
    #[arg(long)]
    pub derive_thresholds: bool,
    /// Threshold for every class in the general-threshold run, and for
    /// classes missing from the thresholds file.
    #[arg(long, default_value_t = 0.5)]
    pub general_threshold: f64,
    /// Weight of 1 - IoU in the linking cost; the rest goes to the class-score distance.
    #[arg(long, default_value_t = 0.7)]
    pub alpha: f64,
    /// Links costing more than this are cut.
    #[arg(long, default_value_t = 0.7)]
    pub cost_cutoff: f64,
    /// IoU threshold of the evaluation.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Write the filtered, rescored stream here (JSON).
    #[arg(long)]
    pub filtered_output: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Taus(pub Vec<f64>);

/// `start:step:end` (inclusive) or `a,b,c`.
pub fn parse_taus(s: &str) -> Result<Taus, String> {
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [start, step, end] => {
            let (start, step, end) = (num(start)?, num(step)?, num(end)?);
            if step.is_nan() || step <= 0.0 || end < start {
                return Err(format!("`{s}` is not an increasing range"));
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            // round away the accumulated error so 0.5 + 0.05 prints as 0.55
            (0..=n).map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("`{s}` is neither start:step:end nor a comma list")),
    };
    if values.is_empty() {
        return Err("no IoU thresholds given".into());
    }
    Ok(Taus(values))
}
