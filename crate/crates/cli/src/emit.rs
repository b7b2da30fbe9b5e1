//! CSV, JSON manifest and SVG writers. All output is a pure function of the
//! result, so equal results give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fbl_core::stats::LineFit;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Experiment;
use crate::error::{FblError, Result};
use crate::runner::{CellFailure, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = FblError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(FblError::config(format!("unknown output format `{other}`"))),
        }
    }
}

/// Parses a comma-separated format list such as `csv,json`.
pub fn parse_formats(list: &str) -> Result<Vec<Format>> {
    let mut formats = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Format::from_str)
        .collect::<Result<Vec<_>>>()?;
    formats.sort();
    formats.dedup();
    Ok(formats)
}

pub fn csv_string(result: &SweepResult) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(&result.table.header)
        .expect("writing to memory");
    for row in &result.table.rows {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("ASCII output")
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    kind: &'static str,
    /// The configuration text exactly as read.
    config: &'a str,
    config_sha256: String,
    seed: u64,
    versions: BTreeMap<&'static str, &'static str>,
    header: &'a [String],
    rows: usize,
    fits: &'a BTreeMap<String, LineFit>,
    ratios: &'a BTreeMap<String, f64>,
    failures: &'a [CellFailure],
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

pub fn manifest_string(experiment: &Experiment, result: &SweepResult) -> String {
    let digest = Sha256::digest(experiment.source.as_bytes());
    let manifest = Manifest {
        kind: result.kind.name(),
        config: &experiment.source,
        config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        seed: result.seed,
        versions: BTreeMap::from([("fbl", env!("CARGO_PKG_VERSION")), ("fbl-core", fbl_core::VERSION)]),
        header: &result.table.header,
        rows: result.table.rows.len(),
        fits: &result.fits,
        ratios: &result.ratios,
        failures: &result.failures,
        wall_time_seconds: result.wall_time_seconds,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest is serializable");
    text.push('\n');
    text
}

/// Config text and seed recorded in a manifest.
pub fn read_manifest(text: &str) -> Result<(String, u64)> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| FblError::config(format!("manifest: {e}")))?;
    let config = value["config"]
        .as_str()
        .ok_or_else(|| FblError::config("manifest has no config"))?;
    let seed = value["seed"]
        .as_u64()
        .ok_or_else(|| FblError::config("manifest has no seed"))?;
    Ok((config.to_owned(), seed))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn svg_string(result: &SweepResult) -> String {
    let (width, height, margin) = (720.0, 450.0, 60.0);
    let finite: Vec<(f64, f64)> = result
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let bounds = |pick: fn(&(f64, f64)) -> f64| {
        let lo = finite.iter().map(pick).fold(f64::INFINITY, f64::min);
        let hi = finite.iter().map(pick).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-300 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| margin + (x - x0) / (x1 - x0) * (width - 2.0 * margin);
    let sy = |y: f64| height - margin - (y - y0) / (y1 - y0) * (height - 2.0 * margin);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{margin}" y="{margin}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        width - 2.0 * margin,
        height - 2.0 * margin
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        width / 2.0,
        height - 15.0,
        escape(&result.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" font-size="13" transform="rotate(-90 15 {})" text-anchor="middle">{}</text>"#,
        height / 2.0,
        height / 2.0,
        escape(&result.y_label)
    );
    for (label, x, y) in [
        (format!("{x0:.4}"), margin, height - margin + 16.0),
        (format!("{x1:.4}"), width - margin, height - margin + 16.0),
    ] {
        let _ = writeln!(svg, r#"<text x="{x}" y="{y}" text-anchor="middle" font-size="11">{label}</text>"#);
    }
    for (label, y) in [(format!("{y0:.4}"), height - margin), (format!("{y1:.4}"), margin)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" text-anchor="end" font-size="11">{label}</text>"#,
            margin - 4.0
        );
    }
    for (i, series) in result.series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = series
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if series.name.ends_with("fit") {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"><title>{}</title></polyline>"#,
            points.join(" "),
            escape(&series.name)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" fill="{colour}">{}</text>"#,
            margin + 10.0,
            margin + 18.0 * (i as f64 + 1.0),
            escape(&series.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes the requested formats into `dir` as `<kind>.<ext>`; returns the
/// paths written.
pub fn emit(experiment: &Experiment, result: &SweepResult, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| FblError::io(dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        let (ext, body) = match format {
            Format::Csv => ("csv", csv_string(result)),
            Format::Json => ("json", manifest_string(experiment, result)),
            Format::Svg => ("svg", svg_string(result)),
        };
        let path = dir.join(format!("{}.{ext}", result.kind.name()));
        std::fs::write(&path, body).map_err(|e| FblError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
