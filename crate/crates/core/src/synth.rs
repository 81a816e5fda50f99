//! Piecewise-stationary Gaussian series with known change points.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::series::TimeSeries;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum JumpKind {
    /// Each segment mean moves by `±magnitude` per channel.
    #[default]
    MeanShift,
    /// Noise scale alternates between `noise_sigma` and `noise_sigma · magnitude`.
    VarianceShift,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SyntheticSpec {
    pub n_segments: usize,
    /// Inclusive range of segment lengths.
    pub min_segment_len: usize,
    pub max_segment_len: usize,
    pub channels: usize,
    pub jump: JumpKind,
    pub magnitude: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_segments: 5,
            min_segment_len: 150,
            max_segment_len: 250,
            channels: 1,
            jump: JumpKind::MeanShift,
            magnitude: 5.0,
            noise_sigma: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_segments > 0
            && self.min_segment_len > 0
            && self.min_segment_len <= self.max_segment_len
            && self.channels > 0
            && self.magnitude.is_finite()
            && self.magnitude > 0.0
            && self.noise_sigma.is_finite()
            && self.noise_sigma > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid synthetic spec: {self:?}")))
        }
    }
}

/// Generates the series; change points are the first index of every
/// segment after the first.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = spec.channels;
    let mut data = Vec::new();
    let mut change_points = Vec::with_capacity(spec.n_segments - 1);
    let mut mean = alloc::vec![0.0; c];
    let mut t = 0usize;
    for k in 0..spec.n_segments {
        if k > 0 {
            change_points.push(t);
            if spec.jump == JumpKind::MeanShift {
                for m in mean.iter_mut() {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    *m += sign * spec.magnitude;
                }
            }
        }
        let sigma = match spec.jump {
            JumpKind::MeanShift => spec.noise_sigma,
            JumpKind::VarianceShift if k % 2 == 1 => spec.noise_sigma * spec.magnitude,
            JumpKind::VarianceShift => spec.noise_sigma,
        };
        let len = rng.random_range(spec.min_segment_len..=spec.max_segment_len);
        for _ in 0..len {
            for m in &mean {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(m + sigma * z);
            }
        }
        t += len;
    }
    let name = format!("synthetic-{}", spec.seed);
    TimeSeries::from_matrix(name, Matrix::from_vec(t, c, data)?, change_points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_segment_has_no_change_points() {
        let spec = SyntheticSpec {
            n_segments: 1,
            ..SyntheticSpec::default()
        };
        let ts = generate_synthetic(&spec).unwrap();
        assert!(ts.change_points().is_empty());
        assert!((150..=250).contains(&ts.len()));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec::default();
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 1, ..spec };
        assert_ne!(generate_synthetic(&other).unwrap(), generate_synthetic(&SyntheticSpec::default()).unwrap());
    }

    #[test]
    fn mean_shift_jump_is_visible() {
        let spec = SyntheticSpec {
            n_segments: 2,
            magnitude: 5.0,
            noise_sigma: 0.1,
            seed: 3,
            ..SyntheticSpec::default()
        };
        let ts = generate_synthetic(&spec).unwrap();
        let cp = ts.change_points()[0];
        let v = ts.values().as_slice();
        let w = 25;
        let before = v[cp - w..cp].iter().sum::<f64>() / w as f64;
        let after = v[cp..cp + w].iter().sum::<f64>() / w as f64;
        assert!(((after - before).abs() - 5.0).abs() < 0.1, "{before} -> {after}");
    }

    #[test]
    fn variance_shift_changes_spread() {
        let spec = SyntheticSpec {
            n_segments: 2,
            jump: JumpKind::VarianceShift,
            magnitude: 4.0,
            seed: 5,
            ..SyntheticSpec::default()
        };
        let ts = generate_synthetic(&spec).unwrap();
        let cp = ts.change_points()[0];
        let v = ts.values().as_slice();
        let sd = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            (x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / x.len() as f64).sqrt()
        };
        let ratio = sd(&v[cp..]) / sd(&v[..cp]);
        assert!((ratio - 4.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_invalid_spec() {
        let spec = SyntheticSpec {
            min_segment_len: 10,
            max_segment_len: 5,
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&spec).is_err());
    }
}
