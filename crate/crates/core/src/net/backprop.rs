//! Forward pass, composite loss and its analytic gradient.
//!
//! Past and current windows are pushed through the network as one stacked
//! batch of `2B` rows: rows `0..B` are `x_left`, rows `B..2B` are `x_right`.
//!
//! ```text
//! loss = (1/B) Σ ‖x_L − x̂_L‖² + (1/B) Σ ‖x_R − x̂_R‖² + β · MMD(Z_L, Z_R)
//! ```
//!
//! A median-heuristic bandwidth is computed from the current codes and then
//! treated as a constant: no gradient flows through `γ`.

use alloc::vec::Vec;

use super::{AutoencoderModel, Dense, LossVariant};
use crate::error::{Error, Result};
use crate::kernel::{self, Bandwidth, KernelSpec, MmdEstimator};
use crate::matrix::Matrix;
use crate::window::PairBatch;

/// Parameters of the composite objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSpec {
    pub beta: f64,
    pub kernel: KernelSpec,
    pub variant: LossVariant,
    pub estimator: MmdEstimator,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self {
            beta: 1.0,
            kernel: KernelSpec::default(),
            variant: LossVariant::MsePlusMmd,
            estimator: MmdEstimator::BatchBiased,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub recon_left: f64,
    pub recon_right: f64,
    /// Unweighted MMD term (0 for `mse_only`).
    pub mmd: f64,
    /// Bandwidth used for the MMD term (0 when the term is disabled).
    pub gamma: f64,
}

/// Per-parameter gradients, laid out like [`AutoencoderModel::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(model: &AutoencoderModel) -> Self {
        Self {
            layers: model.layers().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect(),
        }
    }

    /// Every coordinate, weights before biases, layer by layer.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.extend_from_slice(l.weight.as_slice());
            v.extend_from_slice(&l.bias);
        }
        v
    }
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// `act(X Wᵀ + b)`; returns `(pre_activation, activation)`.
fn affine(layer: &Dense, x: &Matrix, relu_out: bool) -> (Matrix, Matrix) {
    let n = x.rows();
    let out_dim = layer.outputs();
    let mut pre = Matrix::zeros(n, out_dim);
    for i in 0..n {
        let xi = x.row(i);
        let row = pre.row_mut(i);
        for (o, slot) in row.iter_mut().enumerate() {
            let w = layer.weight.row(o);
            *slot = layer.bias[o] + w.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let act = if relu_out {
        let mut a = pre.clone();
        a.as_mut_slice().iter_mut().for_each(|v| *v = relu(*v));
        a
    } else {
        pre.clone()
    };
    (pre, act)
}

struct Trace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Matrix>,
    pres: Vec<Matrix>,
}

fn run(model: &AutoencoderModel, x: &Matrix) -> Trace {
    let n_layers = model.encoder.len() + model.decoder.len();
    let mut acts = Vec::with_capacity(n_layers + 1);
    let mut pres = Vec::with_capacity(n_layers);
    acts.push(x.clone());
    for (l, layer) in model.layers().enumerate() {
        let relu_out = !(model.linear_output && l == n_layers - 1);
        let (pre, act) = affine(layer, &acts[l], relu_out);
        pres.push(pre);
        acts.push(act);
    }
    Trace { acts, pres }
}

fn check_input(model: &AutoencoderModel, x: &Matrix) -> Result<()> {
    if x.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: x.cols(),
        });
    }
    Ok(())
}

/// Latent codes only.
pub(crate) fn encode(model: &AutoencoderModel, x: &Matrix) -> Matrix {
    model
        .encoder
        .iter()
        .fold(x.clone(), |h, layer| affine(layer, &h, true).1)
}

/// Returns `(Z, X̂)` for a `B x D` input.
pub fn forward(model: &AutoencoderModel, x: &Matrix) -> Result<(Matrix, Matrix)> {
    check_input(model, x)?;
    let mut trace = run(model, x);
    let x_hat = trace.acts.pop().expect("at least one layer");
    let z = trace.acts.swap_remove(model.encoder.len());
    Ok((z, x_hat))
}

fn check_batch(model: &AutoencoderModel, batch: &PairBatch) -> Result<()> {
    check_input(model, &batch.x_left)?;
    check_input(model, &batch.x_right)?;
    if batch.x_left.rows() != batch.x_right.rows() || batch.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: batch.x_left.rows(),
            found: batch.x_right.rows(),
        });
    }
    Ok(())
}

/// `γ` for the latent MMD term. Degenerate code sets fall back to 1: when
/// every code is identical the MMD and its gradient vanish for any `γ`.
fn latent_gamma(kernel: &KernelSpec, z: &Matrix) -> Result<f64> {
    match kernel.bandwidth {
        Bandwidth::Fixed(_) => kernel.resolve(z),
        Bandwidth::MedianHeuristic => match kernel::median_gamma(z, kernel.family) {
            Ok(g) => Ok(g),
            Err(Error::DegeneratePointSet) => Ok(1.0),
            Err(e) => Err(e),
        },
    }
}

struct Evaluated {
    parts: LossParts,
    trace: Trace,
    mmd_grads: Option<(Matrix, Matrix)>,
}

fn evaluate(model: &AutoencoderModel, batch: &PairBatch, spec: &LossSpec, want_grad: bool) -> Result<Evaluated> {
    check_batch(model, batch)?;
    spec.kernel.validate()?;
    let b = batch.len();
    let x = batch.x_left.vstack(&batch.x_right)?;
    let trace = run(model, &x);
    let x_hat = trace.acts.last().expect("at least one layer");
    let bf = b as f64;
    let sse = |range: core::ops::Range<usize>| -> f64 {
        range
            .map(|i| {
                x.row(i)
                    .iter()
                    .zip(x_hat.row(i))
                    .map(|(a, r)| (a - r) * (a - r))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / bf
    };
    let recon_left = sse(0..b);
    let recon_right = sse(b..2 * b);

    let mut parts = LossParts {
        total: 0.0,
        recon_left,
        recon_right,
        mmd: 0.0,
        gamma: 0.0,
    };
    let mut mmd_grads = None;
    if spec.variant == LossVariant::MsePlusMmd {
        let z = &trace.acts[model.encoder.len()];
        let gamma = latent_gamma(&spec.kernel, z)?;
        let zl = z.slice_rows(0, b);
        let zr = z.slice_rows(b, 2 * b);
        let (value, gl, gr) = kernel::mmd_loss_grad(spec.estimator, spec.kernel.family, gamma, &zl, &zr);
        parts.mmd = value;
        parts.gamma = gamma;
        if want_grad {
            mmd_grads = Some((gl, gr));
        }
    }
    parts.total = parts.recon_left + parts.recon_right + spec.beta * parts.mmd;
    Ok(Evaluated {
        parts,
        trace,
        mmd_grads,
    })
}

/// Composite loss on a batch of segment pairs.
pub fn composite_loss(model: &AutoencoderModel, batch: &PairBatch, spec: &LossSpec) -> Result<LossParts> {
    Ok(evaluate(model, batch, spec, false)?.parts)
}

/// Composite loss and its gradient with respect to every weight and bias.
/// The ReLU subgradient at zero is taken as zero.
pub fn backward(model: &AutoencoderModel, batch: &PairBatch, spec: &LossSpec) -> Result<(LossParts, Gradients)> {
    let Evaluated {
        parts,
        trace,
        mmd_grads,
    } = evaluate(model, batch, spec, true)?;
    let b = batch.len();
    let bf = b as f64;
    let layers: Vec<&Dense> = model.layers().collect();
    let n_layers = layers.len();
    let latent_at = model.encoder.len();

    // dL/dX̂
    let x = &trace.acts[0];
    let x_hat = &trace.acts[n_layers];
    let mut upstream = Matrix::zeros(x.rows(), x.cols());
    for ((g, a), r) in upstream
        .as_mut_slice()
        .iter_mut()
        .zip(x.as_slice())
        .zip(x_hat.as_slice())
    {
        *g = -2.0 / bf * (a - r);
    }

    let mut grads = Gradients::zeros_like(model);
    for l in (0..n_layers).rev() {
        if l + 1 == latent_at {
            if let Some((gl, gr)) = &mmd_grads {
                let up = upstream.as_mut_slice();
                let latent = gl.cols();
                for (u, g) in up[..b * latent].iter_mut().zip(gl.as_slice()) {
                    *u += spec.beta * g;
                }
                for (u, g) in up[b * latent..].iter_mut().zip(gr.as_slice()) {
                    *u += spec.beta * g;
                }
            }
        }
        let layer = layers[l];
        let pre = &trace.pres[l];
        let relu_out = !(model.linear_output && l == n_layers - 1);
        // dL/dpre
        if relu_out {
            for (u, p) in upstream.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                if *p <= 0.0 {
                    *u = 0.0;
                }
            }
        }
        let input = &trace.acts[l];
        let g = &mut grads.layers[l];
        for i in 0..input.rows() {
            let d = upstream.row(i);
            let a = input.row(i);
            for (o, &dv) in d.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                g.bias[o] += dv;
                for (w, av) in g.weight.row_mut(o).iter_mut().zip(a) {
                    *w += dv * av;
                }
            }
        }
        if l > 0 {
            let mut next = Matrix::zeros(input.rows(), input.cols());
            for i in 0..input.rows() {
                let d = upstream.row(i);
                let out = next.row_mut(i);
                for (o, &dv) in d.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    for (s, w) in out.iter_mut().zip(layer.weight.row(o)) {
                        *s += dv * w;
                    }
                }
            }
            upstream = next;
        }
    }
    Ok((parts, grads))
}
