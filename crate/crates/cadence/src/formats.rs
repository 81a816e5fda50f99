//! Score CSV, detection/eval JSON and training-log CSV.

use std::fmt::Write as _;
use std::path::Path;

use cadence_core::{Detection, EvalReport, ScoreSeries, TrainLog};
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::fsutil::write_atomic;

pub const SCORES_HEADER: &str = "t,score,smoothed";

pub fn scores_csv(scores: &ScoreSeries) -> String {
    let mut s = String::with_capacity(32 * scores.len());
    s.push_str(SCORES_HEADER);
    s.push('\n');
    for (i, v) in scores.scores.iter().enumerate() {
        write!(s, "{},{v},", scores.boundary(i)).unwrap();
        if let Some(sm) = &scores.smoothed {
            write!(s, "{}", sm[i]).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn write_scores(path: &Path, scores: &ScoreSeries) -> Result<(), DataError> {
    write_atomic(path, scores_csv(scores).as_bytes()).map_err(|e| DataError::io(path, e))
}

/// Reads a score file back. Boundaries must be consecutive; the series
/// length is recovered as `last_t + start_t` since scoring stops at `T − w`.
pub fn read_scores(path: &Path, series_name: &str) -> Result<ScoreSeries, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SCORES_HEADER => {}
        _ => return Err(DataError::invalid(path, format!("expected header {SCORES_HEADER:?}"))),
    }
    let mut ts = Vec::new();
    let mut raw = Vec::new();
    let mut smoothed = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| DataError::MalformedRow {
            path: path.into(),
            line: i + 1,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        }
        let t: usize = fields[0].parse().map_err(|_| bad(format!("bad boundary {:?}", fields[0])))?;
        let v: f64 = fields[1].parse().map_err(|_| bad(format!("bad score {:?}", fields[1])))?;
        if let Some(&prev) = ts.last() {
            if t != prev + 1 {
                return Err(bad(format!("boundary {t} does not follow {prev}")));
            }
        }
        ts.push(t);
        raw.push(v);
        if !fields[2].is_empty() {
            smoothed.push(fields[2].parse::<f64>().map_err(|_| bad(format!("bad smoothed value {:?}", fields[2])))?);
        }
    }
    let start_t = *ts.first().ok_or(DataError::EmptySeries { path: path.into() })?;
    let last_t = *ts.last().unwrap();
    let mut out = ScoreSeries::from_scores(series_name, start_t, last_t + start_t, raw)?;
    if smoothed.len() == out.len() {
        out.smoothed = Some(smoothed);
    } else if !smoothed.is_empty() {
        return Err(DataError::invalid(path, "smoothed column is only partly filled"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionDoc {
    pub series: String,
    pub threshold: f64,
    pub change_points: Vec<usize>,
    pub segments: Vec<[usize; 2]>,
}

impl DetectionDoc {
    pub fn new(series: &str, d: &Detection) -> Self {
        Self {
            series: series.into(),
            threshold: d.threshold_value,
            change_points: d.change_points.clone(),
            segments: d.segments.iter().map(|&(s, e)| [s, e]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalDoc {
    pub series: String,
    pub auc: f64,
    pub tolerance: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub config_hash: String,
    /// `"smoothed"` or `"score"`: the column that was ranked.
    pub ranked: String,
    pub roc: Vec<[f64; 2]>,
}

impl From<&EvalReport> for EvalDoc {
    fn from(r: &EvalReport) -> Self {
        Self {
            series: r.series_name.clone(),
            auc: r.auc,
            tolerance: r.tolerance,
            n_positive: r.n_positive,
            n_negative: r.n_negative,
            config_hash: format!("{:016x}", r.config_hash),
            ranked: if r.smoothed { "smoothed" } else { "score" }.into(),
            roc: r.roc.iter().map(|&(f, t)| [f, t]).collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| DataError::invalid(path, e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes()).map_err(|e| DataError::io(path, e))
}

/// Loss every logged iteration. Wall-clock time is left out so identical
/// runs give identical files.
pub fn trainlog_csv(log: &TrainLog) -> String {
    let mut s = String::from("iteration,total,recon_left,recon_right,mmd\n");
    for e in &log.entries {
        writeln!(s, "{},{},{},{},{}", e.iteration, e.total, e.recon_left, e.recon_right, e.mmd).unwrap();
    }
    s
}
