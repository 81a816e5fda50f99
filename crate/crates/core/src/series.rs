//! Multivariate time series, min-max normalization and chronological splits.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// A `T x c` series of observations with optional annotated change points.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Matrix,
    channel_names: Vec<String>,
    change_points: Vec<usize>,
    name: String,
}

impl TimeSeries {
    /// Validates and builds a series. Change points are sorted and
    /// deduplicated here; anything outside `[0, T)` is rejected.
    pub fn new(
        name: impl Into<String>,
        values: Matrix,
        channel_names: Vec<String>,
        mut change_points: Vec<usize>,
    ) -> Result<Self> {
        let (t, c) = values.shape();
        if t == 0 || c == 0 {
            return Err(Error::EmptySeries);
        }
        if channel_names.len() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: channel_names.len(),
            });
        }
        for (row, r) in values.iter_rows().enumerate() {
            if let Some(col) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row, col });
            }
        }
        change_points.sort_unstable();
        change_points.dedup();
        if let Some(&last) = change_points.last() {
            if last >= t {
                return Err(Error::InvalidChangePoints(format!(
                    "index {last} outside [0, {t})"
                )));
            }
        }
        Ok(Self {
            values,
            channel_names,
            change_points,
            name: name.into(),
        })
    }

    /// Series with generated channel names `ch0, ch1, ...`.
    pub fn from_matrix(name: impl Into<String>, values: Matrix, change_points: Vec<usize>) -> Result<Self> {
        let names = (0..values.cols()).map(|j| format!("ch{j}")).collect();
        Self::new(name, values, names, change_points)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn change_points(&self) -> &[usize] {
        &self.change_points
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Rows `start..end` with change points re-indexed to the slice.
    pub fn slice(&self, start: usize, end: usize, name: impl Into<String>) -> TimeSeries {
        let change_points = self
            .change_points
            .iter()
            .filter(|&&cp| cp >= start && cp < end)
            .map(|&cp| cp - start)
            .collect();
        TimeSeries {
            values: self.values.slice_rows(start, end),
            channel_names: self.channel_names.clone(),
            change_points,
            name: name.into(),
        }
    }
}

/// Chronological train/validation/test fractions.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidSplit(format!(
                "fractions must be positive, got {fracs:?}"
            )));
        }
        let sum: f64 = fracs.iter().sum();
        if math::abs(sum - 1.0) > 1e-9 {
            return Err(Error::InvalidSplit(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Split points `(train_end, val_end)` for a series of length `t`.
    pub fn boundaries(&self, t: usize) -> (usize, usize) {
        // the 1e-9 nudge keeps e.g. 10 * (0.7 + 0.1) from flooring to 7
        let cut = |f: f64| (math::floor(t as f64 * f + 1e-9) as usize).min(t);
        (cut(self.train_frac), cut(self.train_frac + self.val_frac))
    }
}

/// Per-channel min-max scaling to `[0, 1]`. Constant channels become zeros.
pub fn normalize(ts: &TimeSeries) -> TimeSeries {
    let (t, c) = ts.values.shape();
    let mut lo = alloc::vec![f64::INFINITY; c];
    let mut hi = alloc::vec![f64::NEG_INFINITY; c];
    for r in ts.values.iter_rows() {
        for j in 0..c {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    let mut out = Matrix::zeros(t, c);
    for i in 0..t {
        let src = ts.values.row(i);
        let dst = out.row_mut(i);
        for j in 0..c {
            let span = hi[j] - lo[j];
            dst[j] = if span > 0.0 { (src[j] - lo[j]) / span } else { 0.0 };
        }
    }
    TimeSeries {
        values: out,
        channel_names: ts.channel_names.clone(),
        change_points: ts.change_points.clone(),
        name: ts.name.clone(),
    }
}

/// Chronological three-way split. Change points are re-indexed relative to
/// each part's start; none of the parts may be empty.
pub fn split_chrono(ts: &TimeSeries, spec: &SplitSpec) -> Result<(TimeSeries, TimeSeries, TimeSeries)> {
    spec.validate()?;
    let t = ts.len();
    let (a, b) = spec.boundaries(t);
    for (part, len) in [("train", a), ("validation", b - a), ("test", t - b)] {
        if len == 0 {
            return Err(Error::SplitTooSmall { part, len });
        }
    }
    Ok((
        ts.slice(0, a, format!("{}:train", ts.name)),
        ts.slice(a, b, format!("{}:val", ts.name)),
        ts.slice(b, t, format!("{}:test", ts.name)),
    ))
}
