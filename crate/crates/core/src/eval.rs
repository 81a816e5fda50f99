//! ROC curve and AUC of change-point scores against annotations.
//!
//! A boundary `t` is a positive when it lies within `tolerance` timesteps of
//! some annotated change point. The curve is swept over every distinct
//! score value, so equal scores form a single (diagonal) step, and the area
//! is the trapezoidal integral of that curve.

use alloc::string::String;
use alloc::vec::Vec;

use crate::detect::ScoreSeries;
use crate::error::{Error, Result};

/// Default tolerance around annotated change points, in timesteps.
pub const DEFAULT_TOLERANCE: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub auc: f64,
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub roc: Vec<(f64, f64)>,
    pub tolerance: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub series_name: String,
    pub config_hash: u64,
    /// Whether the smoothed column was ranked rather than the raw scores.
    pub smoothed: bool,
}

/// Positive/negative label of every scored boundary.
pub fn boundary_labels(scores: &ScoreSeries, change_points: &[usize], tolerance: usize) -> Vec<bool> {
    (0..scores.len())
        .map(|i| {
            let t = scores.boundary(i);
            change_points.iter().any(|&cp| cp.abs_diff(t) <= tolerance)
        })
        .collect()
}

/// ROC points and trapezoidal AUC for raw scores and binary labels.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<(Vec<(f64, f64)>, f64)> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    if n_neg == 0 {
        return Err(Error::NoNegatives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (p, n) = (n_pos as f64, n_neg as f64);
    let mut roc = Vec::with_capacity(order.len() + 1);
    roc.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        roc.push((fp as f64 / n, tp as f64 / p));
    }
    let auc = roc
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum::<f64>();
    Ok((roc, auc.clamp(0.0, 1.0)))
}

/// Ranks the smoothed scores when the series carries them (the values
/// detection thresholds), the raw scores otherwise.
pub fn roc_auc(scores: &ScoreSeries, change_points: &[usize], tolerance: usize) -> Result<EvalReport> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if let Some(&cp) = change_points.iter().find(|&&cp| cp >= scores.series_len) {
        return Err(Error::InvalidChangePoints(alloc::format!(
            "index {cp} outside [0, {})",
            scores.series_len
        )));
    }
    let labels = boundary_labels(scores, change_points, tolerance);
    let ranked = scores.smoothed.as_deref().unwrap_or(&scores.scores);
    let (roc, auc) = roc_curve(ranked, &labels)?;
    let n_positive = labels.iter().filter(|&&l| l).count();
    Ok(EvalReport {
        auc,
        roc,
        tolerance,
        n_positive,
        n_negative: labels.len() - n_positive,
        series_name: scores.series_name.clone(),
        config_hash: 0,
        smoothed: scores.smoothed.is_some(),
    })
}
