//! RBF-family kernels, median-heuristic bandwidths and empirical MMD.
//!
//! Conventions:
//!
//! | family   | k(x, y)                 | median heuristic      |
//! |----------|-------------------------|-----------------------|
//! | gaussian | `exp(-γ‖x−y‖²)`         | `γ = 1 / (2 m²)`, m = median L2 distance |
//! | laplace  | `exp(-γ‖x−y‖₁)`         | `γ = 1 / m`, m = median L1 distance      |
//! | cauchy   | `1 / (1 + γ‖x−y‖²)`     | `γ = 1 / (2 m²)`, m = median L2 distance |
//!
//! All three satisfy `k(x, x) = 1`, so the MMD of a single pair of points
//! collapses to `2 (1 − k(x, y))`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// At most this many points enter the median-heuristic distance computation.
pub const MEDIAN_SUBSAMPLE: usize = 1000;
const MEDIAN_SEED: u64 = 0x6d65_6469_616e;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Laplace,
    Cauchy,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [KernelFamily::Gaussian, KernelFamily::Laplace, KernelFamily::Cauchy];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
            KernelFamily::Cauchy => "cauchy",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "laplace" => Ok(KernelFamily::Laplace),
            "cauchy" => Ok(KernelFamily::Cauchy),
            other => Err(Error::InvalidKernel(alloc::format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Bandwidth {
    Fixed(f64),
    #[default]
    MedianHeuristic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct KernelSpec {
    #[cfg_attr(feature = "serde", serde(default))]
    pub family: KernelFamily,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bandwidth: Bandwidth,
}

impl KernelSpec {
    pub fn fixed(family: KernelFamily, gamma: f64) -> Self {
        Self {
            family,
            bandwidth: Bandwidth::Fixed(gamma),
        }
    }

    pub fn median(family: KernelFamily) -> Self {
        Self {
            family,
            bandwidth: Bandwidth::MedianHeuristic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.bandwidth {
            Bandwidth::Fixed(g) if !(g.is_finite() && g > 0.0) => Err(Error::InvalidKernel(
                alloc::format!("bandwidth must be finite and positive, got {g}"),
            )),
            _ => Ok(()),
        }
    }

    /// The fixed `γ`, or the median heuristic over `points`.
    pub fn resolve(&self, points: &Matrix) -> Result<f64> {
        self.validate()?;
        match self.bandwidth {
            Bandwidth::Fixed(g) => Ok(g),
            Bandwidth::MedianHeuristic => median_gamma(points, self.family),
        }
    }
}

/// Which empirical MMD an [`MmdValue`] came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MmdEstimator {
    /// Biased V-statistic over two sets of rows, diagonal terms included.
    #[default]
    BatchBiased,
    /// `2 (1 − k(x, y))` for one pair; averaged over rows when used as a loss.
    SinglePair,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmdValue {
    pub value: f64,
    pub estimator: MmdEstimator,
    pub gamma: f64,
}

#[inline]
fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
fn l1_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| math::abs(a - b)).sum()
}

/// Kernel value with no shape checks; callers guarantee equal lengths.
#[inline]
pub(crate) fn k_unchecked(family: KernelFamily, gamma: f64, x: &[f64], y: &[f64]) -> f64 {
    match family {
        KernelFamily::Gaussian => math::exp(-gamma * sq_dist(x, y)),
        KernelFamily::Laplace => math::exp(-gamma * l1_dist(x, y)),
        KernelFamily::Cauchy => 1.0 / (1.0 + gamma * sq_dist(x, y)),
    }
}

/// Adds `scale * ∂k(x, y)/∂x` into `out`.
#[inline]
fn add_k_grad_x(family: KernelFamily, gamma: f64, x: &[f64], y: &[f64], scale: f64, out: &mut [f64]) {
    match family {
        KernelFamily::Gaussian => {
            let k = math::exp(-gamma * sq_dist(x, y));
            let s = -2.0 * gamma * k * scale;
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o += s * (a - b);
            }
        }
        KernelFamily::Laplace => {
            let k = math::exp(-gamma * l1_dist(x, y));
            let s = -gamma * k * scale;
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o += s * math::signum0(a - b);
            }
        }
        KernelFamily::Cauchy => {
            let k = 1.0 / (1.0 + gamma * sq_dist(x, y));
            let s = -2.0 * gamma * k * k * scale;
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o += s * (a - b);
            }
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(alloc::format!(
            "bandwidth must be finite and positive, got {gamma}"
        )))
    }
}

fn fixed_gamma(spec: &KernelSpec) -> Result<f64> {
    match spec.bandwidth {
        Bandwidth::Fixed(g) => check_gamma(g).map(|_| g),
        Bandwidth::MedianHeuristic => Err(Error::InvalidKernel(
            "bandwidth must be resolved to a fixed value".into(),
        )),
    }
}

/// Evaluates the kernel with a fixed bandwidth.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let gamma = fixed_gamma(spec)?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(k_unchecked(spec.family, gamma, x, y))
}

/// Median-heuristic bandwidth over the rows of `points`.
///
/// Uses L1 distances for the Laplace family and Euclidean distances
/// otherwise. Sets larger than [`MEDIAN_SUBSAMPLE`] rows are subsampled
/// without replacement by a fixed-seed generator, so the result depends only
/// on the input.
pub fn median_gamma(points: &Matrix, family: KernelFamily) -> Result<f64> {
    let n = points.rows();
    if n < 2 {
        return Err(Error::DegeneratePointSet);
    }
    let idx: Vec<usize> = if n > MEDIAN_SUBSAMPLE {
        let mut rng = ChaCha8Rng::seed_from_u64(MEDIAN_SEED);
        let mut v = rand::seq::index::sample(&mut rng, n, MEDIAN_SUBSAMPLE).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..n).collect()
    };
    let mut dists = Vec::with_capacity(idx.len() * (idx.len() - 1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let (x, y) = (points.row(i), points.row(j));
            dists.push(match family {
                KernelFamily::Laplace => l1_dist(x, y),
                _ => math::sqrt(sq_dist(x, y)),
            });
        }
    }
    let m = median(&mut dists);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::DegeneratePointSet);
    }
    Ok(match family {
        KernelFamily::Laplace => 1.0 / m,
        _ => 1.0 / (2.0 * m * m),
    })
}

fn median(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

fn check_cols(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() == 0 || b.rows() == 0 {
        return Err(Error::EmptyPairSet);
    }
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.cols(),
        });
    }
    Ok(())
}

/// Sum of `k(a_i, b_j)` over all row pairs, accumulated row by row.
fn kernel_block_sum(family: KernelFamily, gamma: f64, a: &Matrix, b: &Matrix) -> f64 {
    a.iter_rows()
        .map(|x| b.iter_rows().map(|y| k_unchecked(family, gamma, x, y)).sum::<f64>())
        .sum()
}

/// Mean of the two cross terms, evaluated so that swapping the arguments
/// gives a bit-identical result.
fn symmetric_cross(family: KernelFamily, gamma: f64, a: &Matrix, b: &Matrix) -> f64 {
    // k is symmetric in its arguments up to rounding of the distance sum;
    // averaging both orders makes mmd(a, b) == mmd(b, a) exactly.
    0.5 * (kernel_block_sum(family, gamma, a, b) + kernel_block_sum(family, gamma, b, a))
}

pub(crate) fn mmd2_biased_with_gamma(family: KernelFamily, gamma: f64, zl: &Matrix, zr: &Matrix) -> f64 {
    let (m, n) = (zl.rows() as f64, zr.rows() as f64);
    let kll = kernel_block_sum(family, gamma, zl, zl);
    let krr = kernel_block_sum(family, gamma, zr, zr);
    let klr = symmetric_cross(family, gamma, zl, zr);
    // order the two self terms canonically so the sum is symmetric too
    let (s1, s2) = if kll / (m * m) <= krr / (n * n) {
        (kll / (m * m), krr / (n * n))
    } else {
        (krr / (n * n), kll / (m * m))
    };
    let v = s1 + s2 - 2.0 * klr / (m * n);
    clamp_nonneg(v)
}

#[inline]
fn clamp_nonneg(v: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Biased (V-statistic) MMD² between the rows of `z_left` and `z_right`.
/// A median-heuristic bandwidth is taken over the union of both sets.
pub fn mmd2_batch(spec: &KernelSpec, z_left: &Matrix, z_right: &Matrix) -> Result<MmdValue> {
    check_cols(z_left, z_right)?;
    let gamma = spec.resolve(&z_left.vstack(z_right)?)?;
    Ok(MmdValue {
        value: mmd2_biased_with_gamma(spec.family, gamma, z_left, z_right),
        estimator: MmdEstimator::BatchBiased,
        gamma,
    })
}

/// Degenerate one-sample-per-side MMD, `2 (1 − k(z_left, z_right))`.
pub fn mmd_pair(spec: &KernelSpec, z_left: &[f64], z_right: &[f64]) -> Result<MmdValue> {
    let k = kernel_eval(spec, z_left, z_right)?;
    let gamma = fixed_gamma(spec)?;
    Ok(MmdValue {
        value: clamp_nonneg(2.0 * (1.0 - k)),
        estimator: MmdEstimator::SinglePair,
        gamma,
    })
}

#[inline]
pub(crate) fn pair_score(family: KernelFamily, gamma: f64, x: &[f64], y: &[f64]) -> f64 {
    clamp_nonneg(2.0 * (1.0 - k_unchecked(family, gamma, x, y)))
}

/// Value and gradients of a latent MMD loss term with `γ` held constant.
/// Returns `(value, ∂/∂z_left, ∂/∂z_right)`.
pub(crate) fn mmd_loss_grad(
    estimator: MmdEstimator,
    family: KernelFamily,
    gamma: f64,
    zl: &Matrix,
    zr: &Matrix,
) -> (f64, Matrix, Matrix) {
    let (m, n) = (zl.rows(), zr.rows());
    let mut gl = Matrix::zeros(m, zl.cols());
    let mut gr = Matrix::zeros(n, zr.cols());
    match estimator {
        MmdEstimator::BatchBiased => {
            let value = mmd2_biased_with_gamma(family, gamma, zl, zr);
            let (mf, nf) = (m as f64, n as f64);
            // self terms: each k(a_i, a_j) appears twice (i,j and j,i)
            for i in 0..m {
                let out = gl.row_mut(i);
                for j in 0..m {
                    if i != j {
                        add_k_grad_x(family, gamma, zl.row(i), zl.row(j), 2.0 / (mf * mf), out);
                    }
                }
                for j in 0..n {
                    add_k_grad_x(family, gamma, zl.row(i), zr.row(j), -2.0 / (mf * nf), out);
                }
            }
            for i in 0..n {
                let out = gr.row_mut(i);
                for j in 0..n {
                    if i != j {
                        add_k_grad_x(family, gamma, zr.row(i), zr.row(j), 2.0 / (nf * nf), out);
                    }
                }
                for j in 0..m {
                    add_k_grad_x(family, gamma, zr.row(i), zl.row(j), -2.0 / (mf * nf), out);
                }
            }
            (value, gl, gr)
        }
        MmdEstimator::SinglePair => {
            // mean over rows of 2 (1 - k(l_i, r_i)); requires m == n
            let b = m as f64;
            let mut value = 0.0;
            for i in 0..m {
                let (x, y) = (zl.row(i), zr.row(i));
                value += 2.0 * (1.0 - k_unchecked(family, gamma, x, y));
                add_k_grad_x(family, gamma, x, y, -2.0 / b, gl.row_mut(i));
                add_k_grad_x(family, gamma, y, x, -2.0 / b, gr.row_mut(i));
            }
            (clamp_nonneg(value / b), gl, gr)
        }
    }
}
