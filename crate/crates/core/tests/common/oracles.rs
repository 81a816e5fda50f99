//! Independent reference implementations shared by the test suites: a
//! nested-loop forward pass, the composite loss written out directly, a
//! double-sum MMD and a central finite-difference gradient check.
#![allow(dead_code)]

use cadence_core::net::LossSpec;
use cadence_core::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
// denominators below this are treated as absolute error
pub const FLOOR: f64 = 1e-6;

pub fn kern(family: KernelFamily, gamma: f64, x: &[f64], y: &[f64]) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    match family {
        KernelFamily::Gaussian => (-gamma * sq).exp(),
        KernelFamily::Laplace => (-gamma * l1).exp(),
        KernelFamily::Cauchy => 1.0 / (1.0 + gamma * sq),
    }
}

pub fn naive_mmd(family: KernelFamily, gamma: f64, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mean = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        let mut s = 0.0;
        for x in p {
            for y in q {
                s += kern(family, gamma, x, y);
            }
        }
        s / (p.len() * q.len()) as f64
    };
    (mean(a, a) + mean(b, b) - 2.0 * mean(a, b)).max(0.0)
}

/// Plain nested-loop forward pass; returns (latent, reconstruction).
pub fn oracle_forward(model: &AutoencoderModel, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n_layers = model.encoder.len() + model.decoder.len();
    let mut h = x.to_vec();
    let mut z = Vec::new();
    for (l, layer) in model.layers().enumerate() {
        let mut next = vec![0.0; layer.outputs()];
        for o in 0..layer.outputs() {
            let mut s = layer.bias[o];
            for i in 0..layer.inputs() {
                s += layer.weight.get(o, i) * h[i];
            }
            let linear = model.linear_output && l == n_layers - 1;
            next[o] = if linear || s > 0.0 { s } else { 0.0 };
        }
        h = next;
        if l + 1 == model.encoder.len() {
            z = h.clone();
        }
    }
    (z, h)
}

pub fn oracle_loss(model: &AutoencoderModel, batch: &PairBatch, spec: &LossSpec) -> f64 {
    let b = batch.len();
    let mut zl = Vec::new();
    let mut zr = Vec::new();
    let mut recon = 0.0;
    for i in 0..b {
        for (x, codes) in [(batch.x_left.row(i), &mut zl), (batch.x_right.row(i), &mut zr)] {
            let (z, xh) = oracle_forward(model, x);
            recon += x.iter().zip(&xh).map(|(a, r)| (a - r).powi(2)).sum::<f64>();
            codes.push(z);
        }
    }
    recon /= b as f64;
    if spec.variant != LossVariant::MsePlusMmd {
        return recon;
    }
    let gamma = match spec.kernel.bandwidth {
        Bandwidth::Fixed(g) => g,
        Bandwidth::MedianHeuristic => unreachable!("oracle needs a fixed bandwidth"),
    };
    let mmd = match spec.estimator {
        MmdEstimator::BatchBiased => naive_mmd(spec.kernel.family, gamma, &zl, &zr),
        MmdEstimator::SinglePair => {
            zl.iter()
                .zip(&zr)
                .map(|(a, c)| 2.0 * (1.0 - kern(spec.kernel.family, gamma, a, c)))
                .sum::<f64>()
                / b as f64
        }
    };
    recon + spec.beta * mmd
}

pub struct Instance {
    pub model: AutoencoderModel,
    pub batch: PairBatch,
    pub spec: LossSpec,
}

pub fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> Instance {
    let d = rng.random_range(2..=8);
    let z = rng.random_range(1..=3);
    let b = rng.random_range(2..=5);
    let mut model = init_model(d, z, rng.random()).unwrap();
    // small positive biases keep most units away from the ReLU kink
    for layer in model.layers_mut() {
        for v in layer.bias.iter_mut() {
            *v = rng.random_range(0.05..0.3);
        }
    }
    model.linear_output = k % 4 == 3;
    let pairs: Vec<SegmentPair> = (0..b)
        .map(|t| SegmentPair {
            t,
            x_left: (0..d).map(|_| rng.random_range(0.0..1.0)).collect(),
            x_right: (0..d).map(|_| rng.random_range(0.0..1.0)).collect(),
        })
        .collect();
    let family = KernelFamily::ALL[k % 3];
    let variant = if k.is_multiple_of(2) {
        LossVariant::MsePlusMmd
    } else {
        LossVariant::MseOnly
    };
    let estimator = if k % 5 == 4 {
        MmdEstimator::SinglePair
    } else {
        MmdEstimator::BatchBiased
    };
    let spec = LossSpec {
        beta: rng.random_range(0.5..10.0),
        kernel: KernelSpec::fixed(family, rng.random_range(0.2..2.0)),
        variant,
        estimator,
    };
    Instance {
        model,
        batch: PairBatch::from_pairs(&pairs).unwrap(),
        spec,
    }
}

pub fn perturbed(model: &AutoencoderModel, idx: usize, delta: f64) -> AutoencoderModel {
    let mut m = model.clone();
    let mut k = idx;
    for layer in m.layers_mut() {
        let nw = layer.weight.as_slice().len();
        if k < nw {
            layer.weight.as_mut_slice()[k] += delta;
            break;
        }
        k -= nw;
        if k < layer.bias.len() {
            layer.bias[k] += delta;
            break;
        }
        k -= layer.bias.len();
    }
    m
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FLOOR)
}

/// Outcome of comparing analytic and numeric gradients on one instance.
pub struct FdReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates whose ±h step crossed a ReLU or L1 kink.
    pub skipped: usize,
    /// Parameter index, analytic and numeric value at the worst coordinate.
    pub worst: (usize, f64, f64),
}

pub fn fd_check(inst: &Instance) -> FdReport {
    let (_, grads) = backward(&inst.model, &inst.batch, &inst.spec).unwrap();
    let analytic = grads.flat();
    assert_eq!(analytic.len(), inst.model.param_count());
    let f = |m: &AutoencoderModel| oracle_loss(m, &inst.batch, &inst.spec);
    let f0 = f(&inst.model);
    let mut rep = FdReport {
        max_rel_err: 0.0,
        checked: 0,
        skipped: 0,
        worst: (0, 0.0, 0.0),
    };
    for (idx, &a) in analytic.iter().enumerate() {
        let up = f(&perturbed(&inst.model, idx, H));
        let down = f(&perturbed(&inst.model, idx, -H));
        // one-sided slopes disagree only when the step crosses a kink
        let fwd = (up - f0) / H;
        let bwd = (f0 - down) / H;
        if (fwd - bwd).abs() > 1e-3 * fwd.abs().max(bwd.abs()).max(1.0) {
            rep.skipped += 1;
            continue;
        }
        let numeric = (up - down) / (2.0 * H);
        rep.checked += 1;
        let e = rel_err(a, numeric);
        if e > rep.max_rel_err {
            rep.max_rel_err = e;
            rep.worst = (idx, a, numeric);
        }
    }
    rep
}
