//! Unsupervised change-point detection on multivariate time series.
//!
//! Consecutive windows of a series are embedded with a small autoencoder
//! trained on reconstruction error plus the kernel Maximum Mean Discrepancy
//! (MMD) between the codes of neighbouring windows. At inference each
//! boundary is scored by the single-pair MMD between the codes of the
//! window before and the window after it; the smoothed score is then
//! thresholded at a fraction of its maximum to place change points.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, timing and the
//! command-line front end live in the `cadence` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod detect;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod matrix;
pub mod net;
pub mod series;
pub mod synth;
pub mod window;

mod math;

pub use detect::{detect, score_series, segment, smooth, Detection, ScoreSeries};
pub use error::{Error, Result};
pub use eval::{roc_auc, EvalReport};
pub use kernel::{
    kernel_eval, median_gamma, mmd2_batch, mmd_pair, Bandwidth, KernelFamily, KernelSpec,
    MmdEstimator, MmdValue,
};
pub use matrix::Matrix;
pub use net::{
    adam_step, backward, composite_loss, forward, init_model, train, AdamState, AutoencoderModel,
    EarlyStop, Gradients, LossParts, LossVariant, ModelMeta, TrainConfig, TrainLog,
};
pub use series::{normalize, split_chrono, SplitSpec, TimeSeries};
pub use synth::{generate_synthetic, JumpKind, SyntheticSpec};
pub use window::{flatten_window, make_pairs, sample_minibatch, unflatten_window, PairBatch, SegmentPair};
