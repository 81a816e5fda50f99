use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backprop::encode;
use super::{adam_step, backward, init_model, AdamState, AutoencoderModel, LossVariant, ModelMeta, TrainConfig};
use crate::detect::{score_series, smooth};
use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::kernel::{self, Bandwidth};
use crate::matrix::Matrix;
use crate::series::TimeSeries;
use crate::window::{sample_minibatch, SegmentPair};

/// Loss is recorded every this many iterations.
pub const LOG_EVERY: usize = 10;

/// Encoding is chunked so very long series never allocate one huge batch.
const ENCODE_CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub total: f64,
    pub recon_left: f64,
    pub recon_right: f64,
    pub mmd: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub entries: Vec<LogEntry>,
    /// Optimizer steps actually taken.
    pub iterations_run: usize,
    /// Iteration of the selected checkpoint when early stopping is active.
    pub best_iteration: Option<usize>,
    pub best_val_auc: Option<f64>,
    /// Wall-clock seconds; filled in by callers that have a clock.
    pub seconds: f64,
}

/// Stacks the past and current windows of every pair, `2n x D`.
fn all_windows(pairs: &[SegmentPair]) -> Result<Matrix> {
    let d = pairs[0].x_left.len();
    let mut data = Vec::with_capacity(pairs.len() * 2 * d);
    for p in pairs {
        if p.x_left.len() != d || p.x_right.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.x_right.len(),
            });
        }
        data.extend_from_slice(&p.x_left);
        data.extend_from_slice(&p.x_right);
    }
    Matrix::from_vec(2 * pairs.len(), d, data)
}

pub(crate) fn encode_chunked(model: &AutoencoderModel, x: &Matrix) -> Matrix {
    let mut out = Vec::with_capacity(x.rows() * model.latent_dim());
    let mut start = 0;
    while start < x.rows() {
        let end = (start + ENCODE_CHUNK).min(x.rows());
        out.extend_from_slice(encode(model, &x.slice_rows(start, end)).as_slice());
        start = end;
    }
    Matrix::from_vec(x.rows(), model.latent_dim(), out).expect("encoder output shape")
}

/// Inference bandwidth over every training code (or raw window for the
/// data-space variant). Degenerate sets fall back to `γ = 1`.
fn freeze_gamma(model: &AutoencoderModel, windows: &Matrix, config: &TrainConfig) -> Result<f64> {
    if let Bandwidth::Fixed(g) = config.kernel.bandwidth {
        return Ok(g);
    }
    let points = if config.loss_variant == LossVariant::Dataspace {
        windows.clone()
    } else {
        encode_chunked(model, windows)
    };
    match kernel::median_gamma(&points, config.kernel.family) {
        Ok(g) => Ok(g),
        Err(Error::DegeneratePointSet) => Ok(1.0),
        Err(e) => Err(e),
    }
}

/// Trains an autoencoder on segment pairs.
///
/// Runs `config.iterations` minibatch steps of backpropagation and Adam.
/// With `config.early_stop` set and a labelled validation series given, the
/// checkpoint with the best validation AUC is returned instead of the last
/// one. Afterwards the inference bandwidth is frozen into the model from the
/// codes of all training windows.
pub fn train(
    train_pairs: &[SegmentPair],
    val: Option<&TimeSeries>,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, TrainLog)> {
    if train_pairs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    config.validate()?;
    let input_dim = train_pairs[0].x_left.len();
    if !input_dim.is_multiple_of(config.window) {
        return Err(Error::DimensionMismatch {
            expected: config.window,
            found: input_dim,
        });
    }
    let mut model = init_model(input_dim, config.latent_dim, config.seed)?;
    model.linear_output = config.linear_output;
    model.meta = ModelMeta {
        window: config.window,
        channels: input_dim / config.window,
        kernel: config.kernel.family,
        loss_variant: config.loss_variant,
        config_hash: config.fingerprint(),
    };
    let windows = all_windows(train_pairs)?;
    let mut log = TrainLog::default();

    if config.loss_variant != LossVariant::Dataspace {
        let spec = config.loss_spec();
        let mut state = AdamState::new(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);

        let early = config.early_stop.zip(val);
        let mut best: Option<(f64, usize, AutoencoderModel)> = None;
        let mut stale = 0usize;

        for it in 0..config.iterations {
            let batch = sample_minibatch(train_pairs, config.batch_size, &mut rng)?;
            let (parts, grads) = backward(&model, &batch, &spec)?;
            if it % LOG_EVERY == 0 {
                log.entries.push(LogEntry {
                    iteration: it,
                    total: parts.total,
                    recon_left: parts.recon_left,
                    recon_right: parts.recon_right,
                    mmd: parts.mmd,
                });
            }
            if let Some(ceiling) = config.mmd_ceiling {
                if parts.mmd >= ceiling {
                    break;
                }
            }
            adam_step(&mut model, &grads, &mut state, config.learning_rate)?;
            log.iterations_run = it + 1;

            if let Some((es, val)) = early {
                if (it + 1) % es.eval_every == 0 {
                    let mut probe = model.clone();
                    probe.frozen_gamma = Some(freeze_gamma(&probe, &windows, config)?);
                    let auc = score_series(&probe, val, &config.kernel)
                        .and_then(|s| smooth(&s, config.window | 1))
                        .and_then(|s| roc_auc(&s, val.change_points(), config.window));
                    // a validation split without both classes cannot rank checkpoints
                    let Ok(report) = auc else { continue };
                    if best.as_ref().is_none_or(|(a, _, _)| report.auc > *a) {
                        best = Some((report.auc, it + 1, model.clone()));
                        stale = 0;
                    } else {
                        stale += 1;
                        if stale >= es.patience.max(1) {
                            break;
                        }
                    }
                }
            }
        }
        if let Some((auc, iteration, checkpoint)) = best {
            model = checkpoint;
            log.best_iteration = Some(iteration);
            log.best_val_auc = Some(auc);
        }
    }

    model.frozen_gamma = Some(freeze_gamma(&model, &windows, config)?);
    Ok((model, log))
}
