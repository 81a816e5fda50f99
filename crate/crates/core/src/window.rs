//! Sliding past/current window pairs and minibatch sampling.
//!
//! A boundary `t` pairs the window `values[t-w .. t]` (past) with
//! `values[t .. t+w]` (current). Multichannel windows are flattened
//! time-major: all channels of the first timestep, then the next, and so on.
//! Stride is one timestep, so every boundary in `[w, T-w]` gets a pair.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::series::TimeSeries;

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPair {
    /// Boundary timestep: the first index of the current window.
    pub t: usize,
    pub x_left: Vec<f64>,
    pub x_right: Vec<f64>,
}

/// `B` pairs stacked row-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct PairBatch {
    pub x_left: Matrix,
    pub x_right: Matrix,
    pub boundaries: Vec<usize>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    /// Stacks the given pairs in order.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<PairBatch>
    where
        I: IntoIterator<Item = &'a SegmentPair>,
    {
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut boundaries = Vec::new();
        let mut dim = None;
        for p in pairs {
            let d = *dim.get_or_insert(p.x_left.len());
            if p.x_left.len() != d || p.x_right.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.x_right.len(),
                });
            }
            left.extend_from_slice(&p.x_left);
            right.extend_from_slice(&p.x_right);
            boundaries.push(p.t);
        }
        let d = dim.ok_or(Error::EmptyPairSet)?;
        let b = boundaries.len();
        Ok(PairBatch {
            x_left: Matrix::from_vec(b, d, left)?,
            x_right: Matrix::from_vec(b, d, right)?,
            boundaries,
        })
    }
}

/// Flattens a `w x c` window time-major.
pub fn flatten_window(window: &Matrix) -> Vec<f64> {
    window.as_slice().to_vec()
}

/// Inverse of [`flatten_window`].
pub fn unflatten_window(flat: &[f64], channels: usize) -> Result<Matrix> {
    if channels == 0 || !flat.len().is_multiple_of(channels) {
        return Err(Error::DimensionMismatch {
            expected: channels,
            found: flat.len(),
        });
    }
    Matrix::from_vec(flat.len() / channels, channels, flat.to_vec())
}

/// Flattened window of `w` rows starting at `start`. Because the matrix is
/// row-major, this is a contiguous slice.
#[inline]
pub(crate) fn window_slice(values: &Matrix, start: usize, w: usize) -> &[f64] {
    let c = values.cols();
    &values.as_slice()[start * c..(start + w) * c]
}

/// All `T - 2w + 1` segment pairs of a series, ascending in `t`.
pub fn make_pairs(ts: &TimeSeries, w: usize) -> Result<Vec<SegmentPair>> {
    let t_len = ts.len();
    if w == 0 || t_len < 2 * w {
        return Err(Error::SeriesTooShort { len: t_len, window: w });
    }
    let values = ts.values();
    Ok((w..=t_len - w)
        .map(|t| SegmentPair {
            t,
            x_left: window_slice(values, t - w, w).to_vec(),
            x_right: window_slice(values, t, w).to_vec(),
        })
        .collect())
}

/// Draws `batch_size` pairs uniformly with replacement.
pub fn sample_minibatch<R: Rng + ?Sized>(
    pairs: &[SegmentPair],
    batch_size: usize,
    rng: &mut R,
) -> Result<PairBatch> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairSet);
    }
    if batch_size == 0 {
        return Err(Error::InvalidBatchSize);
    }
    let n = pairs.len();
    let picks: Vec<&SegmentPair> = (0..batch_size)
        .map(|_| &pairs[rng.random_range(0..n)])
        .collect();
    PairBatch::from_pairs(picks)
}
