//! CSV series, label files and dataset manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cadence_core::{Matrix, TimeSeries};
use serde::Deserialize;

use crate::error::DataError;
use crate::fsutil::write_atomic;

/// Reads a headed CSV of reals, one timestep per row, plus an optional
/// label file of change-point indices.
pub fn load_csv(path: &Path, labels: Option<&Path>) -> Result<TimeSeries, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(DataError::EmptySeries { path: path.into() });
    }
    let c = header.len();
    let mut data = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != c {
            return Err(DataError::MalformedRow {
                path: path.into(),
                line,
                reason: format!("expected {c} fields, found {}", record.len()),
            });
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| DataError::MalformedRow {
                path: path.into(),
                line,
                reason: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(DataError::MalformedRow {
                    path: path.into(),
                    line,
                    reason: format!("non-finite value {field:?}"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DataError::EmptySeries { path: path.into() });
    }
    let change_points = match labels {
        Some(lp) => {
            let cps = read_labels(lp)?;
            if let Some(&bad) = cps.iter().find(|&&i| i >= rows) {
                return Err(DataError::LabelOutOfRange {
                    path: lp.into(),
                    index: bad,
                    len: rows,
                });
            }
            cps
        }
        None => Vec::new(),
    };
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let values = Matrix::from_vec(rows, c, data)?;
    Ok(TimeSeries::new(name, values, header, change_points)?)
}

/// One non-negative integer per line; LF or CRLF, blank lines ignored.
pub fn read_labels(path: &Path) -> Result<Vec<usize>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        let v: usize = s.parse().map_err(|_| DataError::MalformedRow {
            path: path.into(),
            line: i + 1,
            reason: format!("cannot parse {s:?} as a change-point index"),
        })?;
        out.push(v);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Writes the series with its channel names as header. Values use the
/// shortest decimal form that parses back to the same binary64.
pub fn write_csv(path: &Path, ts: &TimeSeries) -> Result<(), DataError> {
    let mut s = ts.channel_names().join(",");
    s.push('\n');
    for row in ts.values().iter_rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            write!(s, "{v}").unwrap();
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes()).map_err(|e| DataError::io(path, e))
}

pub fn write_labels(path: &Path, change_points: &[usize]) -> Result<(), DataError> {
    let mut s = String::new();
    for cp in change_points {
        writeln!(s, "{cp}").unwrap();
    }
    write_atomic(path, s.as_bytes()).map_err(|e| DataError::io(path, e))
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub data: PathBuf,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub name: Option<String>,
    /// Groups several series into one dataset whose AUC is macro-averaged.
    #[serde(default)]
    pub dataset: Option<String>,
}

impl ManifestEntry {
    pub fn series_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.data.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()))
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| self.series_name())
    }

    pub fn load(&self) -> Result<TimeSeries, DataError> {
        let ts = load_csv(&self.data, self.labels.as_deref())?;
        let name = self.series_name();
        let end = ts.len();
        Ok(ts.slice(0, end, name))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestDoc {
    One(ManifestEntry),
    Many(Vec<ManifestEntry>),
}

/// A manifest is one entry object or an array of them. Relative paths are
/// resolved against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let doc: ManifestDoc = serde_json::from_str(&text).map_err(|e| DataError::invalid(path, e.to_string()))?;
    let mut entries = match doc {
        ManifestDoc::One(e) => vec![e],
        ManifestDoc::Many(v) => v,
    };
    if entries.is_empty() {
        return Err(DataError::invalid(path, "manifest lists no datasets"));
    }
    let base = path.parent().unwrap_or(Path::new(""));
    for e in &mut entries {
        e.data = base.join(&e.data);
        if let Some(l) = &e.labels {
            e.labels = Some(base.join(l));
        }
    }
    Ok(entries)
}

fn csv_error(path: &Path, e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::io(path, io),
        csv::ErrorKind::Utf8 { err, .. } => DataError::MalformedRow {
            path: path.into(),
            line,
            reason: err.to_string(),
        },
        other => DataError::MalformedRow {
            path: path.into(),
            line,
            reason: format!("{other:?}"),
        },
    }
}
