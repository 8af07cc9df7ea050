use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{from_json, read_file, round_decimals, DECIMALS};
use crate::ap::ApVariant;
use crate::error::{Error, Result};
use crate::eval::{ClassRow, Comparison, EvalConfig, EvalReport, Summary, REPORT_SCHEMA};
use crate::ids::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}` (expected json or csv)")),
        }
    }
}

const COLUMNS: [&str; 16] = [
    "row",
    "class_id",
    "class_name",
    "n_gt",
    "n_det",
    "olrp",
    "olrp_iou",
    "olrp_fp",
    "olrp_fn",
    "s_star",
    "ap_continuous",
    "ap_pascal11",
    "ap_coco101",
    "ap",
    "s_star_min",
    "s_star_max",
];

fn r(v: Option<f64>) -> Option<f64> {
    v.map(round_decimals)
}

fn rounded(report: &EvalReport) -> EvalReport {
    let c = &report.config;
    let s = &report.summary;
    EvalReport {
        schema: report.schema.clone(),
        config: EvalConfig {
            tau: round_decimals(c.tau),
            taus: c.taus.iter().copied().map(round_decimals).collect(),
            ap_variant: c.ap_variant,
            grid_step: round_decimals(c.grid_step),
        },
        classes: report
            .classes
            .iter()
            .map(|row| ClassRow {
                olrp: r(row.olrp),
                olrp_iou: r(row.olrp_iou),
                olrp_fp: r(row.olrp_fp),
                olrp_fn: r(row.olrp_fn),
                s_star: r(row.s_star),
                ap_continuous: r(row.ap_continuous),
                ap_pascal11: r(row.ap_pascal11),
                ap_coco101: r(row.ap_coco101),
                ap: r(row.ap),
                ..row.clone()
            })
            .collect(),
        summary: Summary {
            molrp: round_decimals(s.molrp),
            molrp_iou: r(s.molrp_iou),
            molrp_fp: r(s.molrp_fp),
            molrp_fn: r(s.molrp_fn),
            map: r(s.map),
            s_star_min: round_decimals(s.s_star_min),
            s_star_max: round_decimals(s.s_star_max),
            ..s.clone()
        },
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v:.prec$}", prec = DECIMALS)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

/// Writes a report. Field order is fixed; absent values are `null` in JSON
/// and empty in CSV.
///
/// The CSV form starts with a `#` line echoing the configuration, then one
/// row per class and a final `summary` row.
pub fn write_report<W: Write>(report: &EvalReport, format: Format, mut writer: W) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut writer, &rounded(report)).map_err(|e| Error::Io(e.into()))?;
            writeln!(writer)?;
        }
        Format::Csv => {
            let c = &report.config;
            let taus: Vec<String> = c.taus.iter().map(|&t| fmt_real(t)).collect();
            writeln!(
                writer,
                "# {} tau={} grid_step={} ap_variant={} taus={}",
                report.schema,
                fmt_real(c.tau),
                fmt_real(c.grid_step),
                c.ap_variant,
                taus.join(";")
            )?;
            let mut w = csv::Writer::from_writer(&mut writer);
            w.write_record(COLUMNS)?;
            for row in &report.classes {
                w.write_record([
                    "class".to_string(),
                    row.class_id.to_string(),
                    row.class_name.clone(),
                    row.n_gt.to_string(),
                    row.n_det.to_string(),
                    fmt_opt(row.olrp),
                    fmt_opt(row.olrp_iou),
                    fmt_opt(row.olrp_fp),
                    fmt_opt(row.olrp_fn),
                    fmt_opt(row.s_star),
                    fmt_opt(row.ap_continuous),
                    fmt_opt(row.ap_pascal11),
                    fmt_opt(row.ap_coco101),
                    fmt_opt(row.ap),
                    String::new(),
                    String::new(),
                ])?;
            }
            let s = &report.summary;
            let n_gt: usize = report.classes.iter().map(|r| r.n_gt).sum();
            let n_det: usize = report.classes.iter().map(|r| r.n_det).sum();
            w.write_record([
                "summary".to_string(),
                String::new(),
                "all".to_string(),
                n_gt.to_string(),
                n_det.to_string(),
                fmt_real(s.molrp),
                fmt_opt(s.molrp_iou),
                fmt_opt(s.molrp_fp),
                fmt_opt(s.molrp_fn),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                fmt_opt(s.map),
                fmt_real(s.s_star_min),
                fmt_real(s.s_star_max),
            ])?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn export_report(report: &EvalReport, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_report(report, format, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Reads a report written by [`write_report`] in either format.
pub fn import_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let bytes = read_file(path.as_ref())?;
    let format = match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => Format::Json,
        _ => Format::Csv,
    };
    parse_report(&bytes, format)
}

pub fn parse_report(bytes: &[u8], format: Format) -> Result<EvalReport> {
    let report = match format {
        Format::Json => from_json::<EvalReport>(bytes)?,
        Format::Csv => parse_csv(bytes)?,
    };
    if report.schema != REPORT_SCHEMA {
        return Err(Error::schema("schema", format!("expected {REPORT_SCHEMA}, found {}", report.schema)));
    }
    Ok(report)
}

fn parse_csv(bytes: &[u8]) -> Result<EvalReport> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::schema("<document>", e.to_string()))?;
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let config_line = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::schema("line 1", "missing configuration line"))?;
    let mut words = config_line.split_whitespace();
    let schema = words.next().unwrap_or_default().to_string();
    let mut config = EvalConfig::default();
    for word in words {
        let (key, value) = word
            .split_once('=')
            .ok_or_else(|| Error::schema("line 1", format!("malformed setting `{word}`")))?;
        let bad = |_| Error::schema(format!("line 1: {key}"), format!("cannot parse `{value}`"));
        match key {
            "tau" => config.tau = value.parse().map_err(bad)?,
            "grid_step" => config.grid_step = value.parse().map_err(bad)?,
            "ap_variant" => {
                config.ap_variant = value.parse::<ApVariant>().map_err(|e| Error::schema("line 1: ap_variant", e))?
            }
            "taus" => {
                config.taus = value
                    .split(';')
                    .map(|t| t.parse().map_err(bad))
                    .collect::<Result<Vec<f64>>>()?
            }
            _ => return Err(Error::schema("line 1", format!("unknown setting `{key}`"))),
        }
    }

    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let mut classes = Vec::new();
    let mut summary = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 2, first record line 3
        let line = i + 3;
        let field = |k: usize| record.get(k).unwrap_or_default();
        let real = |k: usize| -> Result<Option<f64>> {
            let v = field(k);
            if v.is_empty() {
                return Ok(None);
            }
            v.parse()
                .map(Some)
                .map_err(|_| Error::schema(format!("line {line}: {}", COLUMNS[k]), format!("cannot parse `{v}`")))
        };
        let count = |k: usize| -> Result<usize> {
            field(k)
                .parse()
                .map_err(|_| Error::schema(format!("line {line}: {}", COLUMNS[k]), format!("cannot parse `{}`", field(k))))
        };
        let required = |k: usize| -> Result<f64> {
            real(k)?.ok_or_else(|| Error::schema(format!("line {line}: {}", COLUMNS[k]), "missing value"))
        };
        match field(0) {
            "class" => classes.push(ClassRow {
                class_id: ClassId(count(1)? as u64),
                class_name: field(2).to_string(),
                n_gt: count(3)?,
                n_det: count(4)?,
                olrp: real(5)?,
                olrp_iou: real(6)?,
                olrp_fp: real(7)?,
                olrp_fn: real(8)?,
                s_star: real(9)?,
                ap_continuous: real(10)?,
                ap_pascal11: real(11)?,
                ap_coco101: real(12)?,
                ap: real(13)?,
            }),
            "summary" => {
                summary = Some(Summary {
                    molrp: required(5)?,
                    molrp_iou: real(6)?,
                    molrp_fp: real(7)?,
                    molrp_fn: real(8)?,
                    map: real(13)?,
                    s_star_min: required(14)?,
                    s_star_max: required(15)?,
                    n_classes_olrp: 0,
                    n_classes_ap: 0,
                })
            }
            other => return Err(Error::schema(format!("line {line}: row"), format!("unknown row kind `{other}`"))),
        }
    }
    let mut summary = summary.ok_or_else(|| Error::schema("<document>", "missing summary row"))?;
    summary.n_classes_olrp = classes.iter().filter(|r| r.olrp.is_some()).count();
    summary.n_classes_ap = classes.iter().filter(|r| r.ap.is_some()).count();
    Ok(EvalReport {
        schema,
        config,
        classes,
        summary,
    })
}

/// Writes a comparison. CSV columns are `class_id, class_name, metric`, the
/// two labels and `delta`; summary entries have an empty class id.
pub fn write_comparison<W: Write>(cmp: &Comparison, format: Format, mut writer: W) -> Result<()> {
    match format {
        Format::Json => {
            let mut c = cmp.clone();
            for e in &mut c.entries {
                e.left = r(e.left);
                e.right = r(e.right);
            }
            serde_json::to_writer_pretty(&mut writer, &c).map_err(|e| Error::Io(e.into()))?;
            writeln!(writer)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut writer);
            w.write_record(["class_id", "class_name", "metric", cmp.left_label.as_str(), cmp.right_label.as_str(), "delta"])?;
            for e in &cmp.entries {
                w.write_record([
                    e.class_id.map(|c| c.to_string()).unwrap_or_default(),
                    e.class_name.clone(),
                    e.metric.clone(),
                    fmt_opt(e.left),
                    fmt_opt(e.right),
                    fmt_opt(e.delta()),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perfect_report() -> EvalReport {
        let classes = vec![ClassRow {
            class_id: ClassId(1),
            class_name: "person".into(),
            n_gt: 2,
            n_det: 2,
            olrp: Some(0.0),
            olrp_iou: Some(0.0),
            olrp_fp: Some(0.0),
            olrp_fn: Some(0.0),
            s_star: Some(0.9),
            ap_continuous: Some(1.0),
            ap_pascal11: Some(1.0),
            ap_coco101: Some(1.0),
            ap: Some(1.0),
        }];
        let summary = Summary::from_rows(&classes).unwrap();
        EvalReport {
            schema: REPORT_SCHEMA.into(),
            config: EvalConfig::default(),
            classes,
            summary,
        }
    }

    #[test]
    fn perfect_csv_row() {
        let mut buf = Vec::new();
        write_report(&perfect_report(), Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# lrp_report_v1 tau=0.5000 grid_step=0.0100 ap_variant=coco101"));
        assert_eq!(lines[1], COLUMNS.join(","));
        assert_eq!(
            lines[2],
            "class,1,person,2,2,0.0000,0.0000,0.0000,0.0000,0.9000,1.0000,1.0000,1.0000,1.0000,,"
        );
        assert!(lines[3].starts_with("summary,,all,2,2,0.0000"));
    }

    #[test]
    fn round_trips() {
        let mut report = perfect_report();
        report.classes[0].olrp = Some(0.123456);
        report.classes[0].olrp_iou = None;
        report.summary = Summary::from_rows(&report.classes).unwrap();
        for format in [Format::Json, Format::Csv] {
            let mut buf = Vec::new();
            write_report(&report, format, &mut buf).unwrap();
            let back = parse_report(&buf, format).unwrap();
            assert_eq!(back.classes[0].olrp, Some(0.1235));
            assert_eq!(back.classes[0].olrp_iou, None);
            assert_eq!(back.summary.molrp, 0.1235);
            assert_eq!(back.config, report.config);
            assert_eq!(back.summary.n_classes_olrp, 1);
        }
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let mut report = perfect_report();
        report.schema = "other".into();
        let mut buf = Vec::new();
        write_report(&report, Format::Json, &mut buf).unwrap();
        assert!(parse_report(&buf, Format::Json).is_err());
    }
}
