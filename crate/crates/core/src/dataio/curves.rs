use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::olrp::SweepResult;

pub const CURVE_COLUMNS: [&str; 13] = [
    "class_id",
    "tau",
    "s",
    "recall",
    "precision",
    "lrp",
    "lrp_iou",
    "lrp_fp",
    "lrp_fn",
    "n_tp",
    "n_fp",
    "n_fn",
    "is_optimal",
];

fn real(v: f64) -> String {
    format!("{v:.4}")
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// Long-format curve table: one row per grid point where LRP is defined,
/// in input order, with `is_optimal` set on the row at `s*`.
///
/// Recall and precision are the complements of the FN and FP components, so
/// each block traces the recall-precision curve of its class along the grid.
pub fn write_curves<W: Write>(sweeps: &[SweepResult], writer: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CURVE_COLUMNS)?;
    let mut rows = 0;
    for sweep in sweeps {
        let s_star = sweep.s_star();
        for (s, b) in sweep.defined_samples() {
            w.write_record([
                sweep.class_id.to_string(),
                real(sweep.tau),
                real(s),
                opt(b.recall()),
                opt(b.precision()),
                real(b.total),
                opt(b.loc),
                opt(b.fp),
                opt(b.fn_),
                b.n_tp.to_string(),
                b.n_fp.to_string(),
                b.n_fn.to_string(),
                (Some(s) == s_star).to_string(),
            ])?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

/// Writes the curve table to `path` and returns the number of data rows.
pub fn export_curves(sweeps: &[SweepResult], path: impl AsRef<Path>) -> Result<usize> {
    let mut out = BufWriter::new(File::create(path)?);
    let rows = write_curves(sweeps, &mut out)?;
    out.flush()?;
    Ok(rows)
}
