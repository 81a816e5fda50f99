//! Change-point scoring, smoothing, thresholding and segmentation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{pair_score, Bandwidth, KernelSpec};
use crate::matrix::Matrix;
use crate::net::{AutoencoderModel, LossVariant};
use crate::series::TimeSeries;
use crate::window::window_slice;

/// Default fraction of the maximum smoothed score used as threshold.
pub const DEFAULT_RATIO: f64 = 0.4;

/// Per-boundary scores; `scores[i]` belongs to boundary `start_t + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSeries {
    /// First scored boundary, equal to the window length.
    pub start_t: usize,
    /// Length of the scored series.
    pub series_len: usize,
    pub scores: Vec<f64>,
    pub smoothed: Option<Vec<f64>>,
    pub series_name: String,
}

impl ScoreSeries {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn boundary(&self, i: usize) -> usize {
        self.start_t + i
    }

    /// Wraps raw scores of a series of length `series_len` scored with window `start_t`.
    pub fn from_scores(series_name: impl Into<String>, start_t: usize, series_len: usize, scores: Vec<f64>) -> Result<Self> {
        if start_t == 0 || series_len + 1 < 2 * start_t || scores.len() != series_len + 1 - 2 * start_t {
            return Err(Error::DimensionMismatch {
                expected: (series_len + 1).saturating_sub(2 * start_t),
                found: scores.len(),
            });
        }
        Ok(Self {
            start_t,
            series_len,
            scores,
            smoothed: None,
            series_name: series_name.into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub change_points: Vec<usize>,
    pub threshold_value: f64,
    /// Half-open `(start, end)` intervals partitioning `[0, T)`.
    pub segments: Vec<(usize, usize)>,
}

/// Scores every boundary `t ∈ [w, T−w]` by the single-pair MMD between the
/// codes of `values[t−w..t]` and `values[t..t+w]`.
///
/// With a median-heuristic `kernel` the model's frozen bandwidth is used;
/// a fixed bandwidth overrides it. Models trained as the data-space
/// ablation compare the raw flattened windows instead of codes.
pub fn score_series(model: &AutoencoderModel, ts: &TimeSeries, kernel: &KernelSpec) -> Result<ScoreSeries> {
    let frozen = model.frozen_gamma.ok_or(Error::UntrainedModel)?;
    if ts.channels() != model.meta.channels {
        return Err(Error::ChannelMismatch {
            expected: model.meta.channels,
            found: ts.channels(),
        });
    }
    let w = model.meta.window;
    let t_len = ts.len();
    if w == 0 || t_len < 2 * w {
        return Err(Error::SeriesTooShort { len: t_len, window: w });
    }
    let gamma = match kernel.bandwidth {
        Bandwidth::Fixed(g) => {
            kernel.validate()?;
            g
        }
        Bandwidth::MedianHeuristic => {
            if kernel.family != model.meta.kernel {
                return Err(Error::InvalidKernel(alloc::format!(
                    "model bandwidth was fitted for {}, not {}",
                    model.meta.kernel,
                    kernel.family
                )));
            }
            frozen
        }
    };

    // window s covers rows s..s+w; boundary t pairs window t-w with window t
    let n_windows = t_len - w + 1;
    let d = w * ts.channels();
    let mut flat = Vec::with_capacity(n_windows * d);
    for s in 0..n_windows {
        flat.extend_from_slice(window_slice(ts.values(), s, w));
    }
    let windows = Matrix::from_vec(n_windows, d, flat)?;
    let codes = if model.meta.loss_variant == LossVariant::Dataspace {
        windows
    } else {
        if model.input_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim(),
                found: d,
            });
        }
        crate::net::train::encode_chunked(model, &windows)
    };
    let scores = (0..=t_len - 2 * w)
        .map(|i| pair_score(kernel.family, gamma, codes.row(i), codes.row(i + w)))
        .collect();
    Ok(ScoreSeries {
        start_t: w,
        series_len: t_len,
        scores,
        smoothed: None,
        series_name: ts.name().into(),
    })
}

/// Centered moving average of odd `width`; the window is clipped at the
/// ends and the average taken over the samples that remain.
pub fn smooth(scores: &ScoreSeries, width: usize) -> Result<ScoreSeries> {
    if width == 0 || width.is_multiple_of(2) {
        return Err(Error::InvalidWidth(width));
    }
    let x = &scores.scores;
    let n = x.len();
    let half = width / 2;
    // mean taken as an offset from the window's first sample, so constant
    // stretches stay exactly constant
    let smoothed = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let anchor = x[lo];
            anchor + x[lo..hi].iter().map(|v| v - anchor).sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let mut out = scores.clone();
    out.smoothed = Some(smoothed);
    Ok(out)
}

/// Indices of strict local maxima. A plateau of equal values counts once,
/// at its first index, when it is strictly above every neighbour it has;
/// a plateau spanning the whole series has no neighbours and is not a peak.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        let left_ok = i == 0 || x[i - 1] < x[i];
        let right_ok = j == n - 1 || x[j + 1] < x[i];
        let has_neighbour = i > 0 || j < n - 1;
        if left_ok && right_ok && has_neighbour {
            peaks.push(i);
        }
        i = j + 1;
    }
    peaks
}

/// Places change points at local maxima of the smoothed score that reach
/// `ratio · max(smoothed)`. Peaks closer than `min_separation` boundaries
/// keep only the higher one (the earlier on exact ties).
pub fn detect(scores: &ScoreSeries, ratio: f64, min_separation: usize) -> Result<Detection> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidRatio);
    }
    let smoothed = scores.smoothed.as_deref().ok_or(Error::EmptyScores)?;
    let max = smoothed.iter().copied().fold(0.0f64, f64::max);
    let threshold_value = ratio * max;
    let t_len = scores.series_len;
    if max <= 0.0 {
        return Ok(Detection {
            change_points: Vec::new(),
            threshold_value,
            segments: segments_from(&[], t_len),
        });
    }
    let mut candidates: Vec<usize> = local_maxima(smoothed)
        .into_iter()
        .filter(|&i| smoothed[i] >= threshold_value)
        .collect();
    // highest first, earliest on ties
    candidates.sort_by(|&a, &b| smoothed[b].total_cmp(&smoothed[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| k.abs_diff(c) >= min_separation) {
            kept.push(c);
        }
    }
    let mut change_points: Vec<usize> = kept.into_iter().map(|i| scores.boundary(i)).collect();
    change_points.sort_unstable();
    Ok(Detection {
        segments: segments_from(&change_points, t_len),
        change_points,
        threshold_value,
    })
}

fn segments_from(change_points: &[usize], t_len: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(change_points.len() + 1);
    let mut start = 0;
    for &cp in change_points {
        if cp > start && cp < t_len {
            out.push((start, cp));
            start = cp;
        }
    }
    out.push((start, t_len));
    out
}

/// One contiguous slice of the series per detected segment.
pub fn segment(ts: &TimeSeries, detection: &Detection) -> Vec<(usize, usize, Matrix)> {
    segments_from(&detection.change_points, ts.len())
        .into_iter()
        .map(|(s, e)| (s, e, ts.values().slice_rows(s, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn series_of(scores: Vec<f64>, start_t: usize) -> ScoreSeries {
        let len = scores.len() + 2 * start_t - 1;
        ScoreSeries::from_scores("s", start_t, len, scores).unwrap()
    }

    #[test]
    fn smoothing_examples() {
        let s = series_of(vec![0.0, 0.0, 1.0, 0.0, 0.0], 1);
        assert_eq!(smooth(&s, 1).unwrap().smoothed.unwrap(), s.scores);
        let out = smooth(&s, 3).unwrap().smoothed.unwrap();
        let third = 1.0 / 3.0;
        let expected = [0.0, third, third, third, 0.0];
        assert!(out.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-15), "{out:?}");
        let c = series_of(vec![0.7; 6], 1);
        assert_eq!(smooth(&c, 5).unwrap().smoothed.unwrap(), vec![0.7; 6]);
        assert_eq!(smooth(&s, 2), Err(Error::InvalidWidth(2)));
        assert_eq!(smooth(&s, 0), Err(Error::InvalidWidth(0)));
    }

    #[test]
    fn edge_windows_are_renormalised() {
        let s = series_of(vec![3.0, 0.0, 0.0, 0.0], 1);
        let out = smooth(&s, 3).unwrap().smoothed.unwrap();
        assert_eq!(out[0], 1.5);
        assert_eq!(out[1], 1.0);
    }

    #[test]
    fn all_zero_scores_detect_nothing() {
        let s = smooth(&series_of(vec![0.0; 20], 5), 5).unwrap();
        let d = detect(&s, 0.4, 5).unwrap();
        assert!(d.change_points.is_empty());
        assert_eq!(d.segments, vec![(0, s.series_len)]);
    }

    #[test]
    fn single_peak() {
        let mut v = vec![0.1; 30];
        v[12] = 1.0;
        let s = smooth(&series_of(v, 4), 1).unwrap();
        let d = detect(&s, 0.4, 4).unwrap();
        assert_eq!(d.change_points, vec![16]);
        assert_eq!(d.threshold_value, 0.4);
        assert_eq!(d.segments, vec![(0, 16), (16, s.series_len)]);
    }

    #[test]
    fn equal_peaks_far_apart_are_kept() {
        let mut v = vec![0.0; 40];
        v[5] = 1.0;
        v[20] = 1.0;
        let s = smooth(&series_of(v, 3), 1).unwrap();
        assert_eq!(detect(&s, 0.4, 10).unwrap().change_points, vec![8, 23]);
        // too close: the earlier one wins the tie
        assert_eq!(detect(&s, 0.4, 16).unwrap().change_points, vec![8]);
    }

    #[test]
    fn sub_threshold_peaks_are_dropped() {
        let mut v = vec![0.0; 40];
        v[5] = 1.0;
        v[25] = 0.39;
        let s = smooth(&series_of(v, 3), 1).unwrap();
        assert_eq!(detect(&s, 0.4, 3).unwrap().change_points, vec![8]);
    }

    #[test]
    fn plateau_counts_once_at_first_index() {
        assert_eq!(local_maxima(&[0.0, 1.0, 1.0, 1.0, 0.0]), vec![1]);
        assert_eq!(local_maxima(&[2.0, 1.0, 0.0]), vec![0]);
        assert!(local_maxima(&[1.0, 1.0, 1.0]).is_empty());
        assert!(local_maxima(&[0.0, 1.0, 1.0, 2.0]).contains(&3));
    }

    #[test]
    fn detect_errors() {
        let s = series_of(vec![1.0, 2.0], 1);
        assert_eq!(detect(&s, 0.4, 1), Err(Error::EmptyScores));
        let s = smooth(&s, 1).unwrap();
        assert_eq!(detect(&s, 0.0, 1), Err(Error::InvalidRatio));
        assert_eq!(detect(&s, 1.5, 1), Err(Error::InvalidRatio));
    }

    #[test]
    fn segments_partition_the_series() {
        let ts = TimeSeries::from_matrix(
            "x",
            Matrix::from_vec(300, 1, (0..300).map(|i| i as f64).collect()).unwrap(),
            vec![],
        )
        .unwrap();
        let det = Detection {
            change_points: vec![100, 200],
            threshold_value: 0.0,
            segments: vec![],
        };
        let segs = segment(&ts, &det);
        let bounds: Vec<_> = segs.iter().map(|(s, e, _)| (*s, *e)).collect();
        assert_eq!(bounds, vec![(0, 100), (100, 200), (200, 300)]);
        let none = Detection {
            change_points: vec![],
            threshold_value: 0.0,
            segments: vec![],
        };
        assert_eq!(segment(&ts, &none).len(), 1);
    }
}
