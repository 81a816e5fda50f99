//! Fully connected autoencoder `D → 40 → 30 → 20 → z → 20 → 30 → 40 → D`
//! with ReLU after every affine layer, trained on reconstruction error plus
//! a weighted latent MMD between past and current windows.

mod adam;
mod backprop;
pub(crate) mod train;

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, KernelSpec, MmdEstimator};
use crate::math;
use crate::matrix::Matrix;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use backprop::{backward, composite_loss, forward, Gradients, LossParts, LossSpec};
pub use train::{train, LogEntry, TrainLog};

/// Widths of the hidden layers between the input and the latent code.
pub const HIDDEN: [usize; 3] = [40, 30, 20];

/// One affine layer, `y = W x + b` with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Matrix::zeros(outputs, inputs),
            bias: alloc::vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.as_slice().len() + self.bias.len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LossVariant {
    /// Reconstruction only; the latent MMD term is dropped.
    MseOnly,
    /// Reconstruction plus `β` times the latent MMD.
    #[default]
    MsePlusMmd,
    /// No network: windows are compared directly in data space.
    Dataspace,
}

impl LossVariant {
    pub const ALL: [LossVariant; 3] = [LossVariant::Dataspace, LossVariant::MseOnly, LossVariant::MsePlusMmd];

    pub fn as_str(self) -> &'static str {
        match self {
            LossVariant::MseOnly => "mse_only",
            LossVariant::MsePlusMmd => "mse_plus_mmd",
            LossVariant::Dataspace => "dataspace",
        }
    }
}

impl core::fmt::Display for LossVariant {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse_only" => Ok(LossVariant::MseOnly),
            "mse_plus_mmd" => Ok(LossVariant::MsePlusMmd),
            "dataspace" => Ok(LossVariant::Dataspace),
            other => Err(Error::InvalidConfig(alloc::format!("unknown loss variant {other:?}"))),
        }
    }
}

/// Validation-based model selection. Needs labels, so it is off by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct EarlyStop {
    /// Evaluate validation AUC every this many iterations.
    pub eval_every: usize,
    /// Stop after this many evaluations without improvement.
    pub patience: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Minibatch steps, not epochs.
    pub iterations: usize,
    pub batch_size: usize,
    pub beta: f64,
    pub window: usize,
    pub latent_dim: usize,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub loss_variant: LossVariant,
    pub mmd_estimator: MmdEstimator,
    pub early_stop: Option<EarlyStop>,
    /// Halt once the batch MMD term reaches this value. Disabled by default.
    pub mmd_ceiling: Option<f64>,
    /// Experimental: identity instead of ReLU on the reconstruction layer.
    pub linear_output: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            iterations: 2000,
            batch_size: 64,
            beta: 1.0,
            window: 25,
            latent_dim: 3,
            seed: 0,
            kernel: KernelSpec::default(),
            loss_variant: LossVariant::MsePlusMmd,
            mmd_estimator: MmdEstimator::BatchBiased,
            early_stop: None,
            mmd_ceiling: None,
            linear_output: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad("beta must be non-negative");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.latent_dim == 0 {
            return bad("latent_dim must be at least 1");
        }
        if let Some(es) = self.early_stop {
            if es.eval_every == 0 {
                return bad("early_stop.eval_every must be at least 1");
            }
        }
        self.kernel.validate()
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec {
            beta: self.beta,
            kernel: self.kernel,
            variant: self.loss_variant,
            estimator: self.mmd_estimator,
        }
    }

    /// FNV-1a over every field; stable across runs and platforms.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.f64(self.learning_rate);
        h.u64(self.iterations as u64);
        h.u64(self.batch_size as u64);
        h.f64(self.beta);
        h.u64(self.window as u64);
        h.u64(self.latent_dim as u64);
        h.u64(self.seed);
        h.u64(self.kernel.family as u64);
        match self.kernel.bandwidth {
            crate::kernel::Bandwidth::Fixed(g) => {
                h.u64(1);
                h.f64(g);
            }
            crate::kernel::Bandwidth::MedianHeuristic => h.u64(2),
        }
        h.u64(self.loss_variant as u64);
        h.u64(self.mmd_estimator as u64);
        match self.early_stop {
            Some(es) => {
                h.u64(1);
                h.u64(es.eval_every as u64);
                h.u64(es.patience as u64);
            }
            None => h.u64(0),
        }
        match self.mmd_ceiling {
            Some(c) => {
                h.u64(1);
                h.f64(c);
            }
            None => h.u64(0),
        }
        h.u64(self.linear_output as u64);
        h.0
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
}

/// What a model was trained on and how.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ModelMeta {
    pub window: usize,
    pub channels: usize,
    pub kernel: KernelFamily,
    pub loss_variant: LossVariant,
    pub config_hash: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderModel {
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
    /// Identity instead of ReLU on the final decoder layer.
    pub linear_output: bool,
    /// Inference bandwidth; present once training has finished.
    pub frozen_gamma: Option<f64>,
    pub meta: ModelMeta,
}

impl AutoencoderModel {
    pub fn input_dim(&self) -> usize {
        self.encoder[0].inputs()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.last().map_or(0, Dense::outputs)
    }

    pub fn is_trained(&self) -> bool {
        self.frozen_gamma.is_some()
    }

    /// Encoder layers followed by decoder layers.
    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.encoder.iter().chain(self.decoder.iter())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Dense::param_count).sum()
    }

    /// Layer widths from input to reconstruction, e.g. `[75, 40, 30, 20, 3, 20, 30, 40, 75]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = alloc::vec![self.input_dim()];
        w.extend(self.layers().map(Dense::outputs));
        w
    }

    /// Builds a zero-initialised model with the given layer widths.
    /// `widths` runs from the input to the reconstruction (at least three
    /// entries); the first `latent_index` layers form the encoder.
    pub fn from_widths(widths: &[usize], latent_index: usize, meta: ModelMeta) -> Result<Self> {
        if widths.len() < 3 || latent_index == 0 || latent_index >= widths.len() - 1 {
            return Err(Error::InvalidConfig("invalid layer widths".into()));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        let layers: Vec<Dense> = widths.windows(2).map(|p| Dense::zeros(p[0], p[1])).collect();
        let mut layers = layers.into_iter();
        let encoder = layers.by_ref().take(latent_index).collect();
        let decoder = layers.collect();
        Ok(Self {
            encoder,
            decoder,
            linear_output: false,
            frozen_gamma: None,
            meta,
        })
    }
}

/// Kaiming-normal initialisation (`σ = √(2 / fan_in)`, zero biases) of the
/// standard architecture. Weights are drawn encoder first, row-major.
pub fn init_model(input_dim: usize, latent_dim: usize, seed: u64) -> Result<AutoencoderModel> {
    if input_dim == 0 || latent_dim == 0 {
        return Err(Error::InvalidConfig("input and latent dimensions must be positive".into()));
    }
    let mut widths = alloc::vec![input_dim];
    widths.extend_from_slice(&HIDDEN);
    widths.push(latent_dim);
    widths.extend(HIDDEN.iter().rev());
    widths.push(input_dim);
    let meta = ModelMeta {
        window: input_dim,
        channels: 1,
        kernel: KernelFamily::Gaussian,
        loss_variant: LossVariant::MsePlusMmd,
        config_hash: 0,
    };
    let mut model = AutoencoderModel::from_widths(&widths, HIDDEN.len() + 1, meta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in model.layers_mut() {
        let std = math::sqrt(2.0 / layer.inputs() as f64);
        let normal = Normal::new(0.0, std).expect("positive standard deviation");
        for w in layer.weight.as_mut_slice() {
            *w = normal.sample(&mut rng);
        }
    }
    Ok(model)
}
