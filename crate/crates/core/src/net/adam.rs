use alloc::vec::Vec;

use super::{AutoencoderModel, Dense, Gradients};
use crate::error::{Error, Result};
use crate::math;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates, one tensor per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Dense>,
    pub second_moment: Vec<Dense>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(model: &AutoencoderModel) -> Self {
        let zeros: Vec<Dense> = model.layers().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect();
        Self {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
        }
    }
}

fn same_shape(a: &Dense, b: &Dense) -> bool {
    a.weight.shape() == b.weight.shape() && a.bias.len() == b.bias.len()
}

/// One bias-corrected Adam update, applied in place.
pub fn adam_step(model: &mut AutoencoderModel, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    let n_layers = model.encoder.len() + model.decoder.len();
    if grads.layers.len() != n_layers || state.first_moment.len() != n_layers || state.second_moment.len() != n_layers
    {
        return Err(Error::ShapeMismatch);
    }
    for (((p, g), m), v) in model
        .layers()
        .zip(&grads.layers)
        .zip(&state.first_moment)
        .zip(&state.second_moment)
    {
        if !(same_shape(p, g) && same_shape(p, m) && same_shape(p, v)) {
            return Err(Error::ShapeMismatch);
        }
    }

    state.step_count += 1;
    let t = state.step_count.min(i32::MAX as u64) as i32;
    let c1 = 1.0 - math::powi(ADAM_BETA1, t);
    let c2 = 1.0 - math::powi(ADAM_BETA2, t);
    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (math::sqrt(v_hat) + ADAM_EPS);
        }
    };
    for (((p, g), m), v) in model
        .layers_mut()
        .zip(&grads.layers)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        update(
            p.weight.as_mut_slice(),
            g.weight.as_slice(),
            m.weight.as_mut_slice(),
            v.weight.as_mut_slice(),
        );
        update(&mut p.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
    Ok(())
}
