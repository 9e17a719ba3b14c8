//! Shared test support: the central-difference gradient oracle.
//!
//! The oracle re-evaluates a scalar loss at parameter +- step and never
//! touches the analytic backward path it is checking.
// Each integration test binary uses its own subset of these helpers.
#![allow(dead_code)]

use facerx_core::{Rng, Tensor};

pub const FD_STEP: f64 = 1e-5;

/// Relative error between a numeric and an analytic derivative, guarded for
/// near-zero gradients.
pub fn relative_error(numeric: f64, analytic: f64) -> f64 {
    let denom = numeric.abs().max(analytic.abs()).max(1e-6);
    (numeric - analytic).abs() / denom
}

/// Central difference of `loss` in one coordinate of `values`.
pub fn central_difference(
    values: &mut Tensor<f64>,
    index: usize,
    step: f64,
    mut loss: impl FnMut(&Tensor<f64>) -> f64,
) -> f64 {
    let original = values.data()[index];
    values.data_mut()[index] = original + step;
    let plus = loss(values);
    values.data_mut()[index] = original - step;
    let minus = loss(values);
    values.data_mut()[index] = original;
    (plus - minus) / (2.0 * step)
}

/// Deterministic spread of up to `max_count` probe positions in `len`.
pub fn probe_positions(len: usize, max_count: usize) -> Vec<usize> {
    if len <= max_count {
        return (0..len).collect();
    }
    (0..max_count).map(|k| k * (len - 1) / (max_count - 1)).collect()
}

/// A random f64 input in a comfortable range for finite differences.
pub fn random_tensor(rng: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::uniform(rng, shape, lo, hi).unwrap()
}

/// Compact sweep of every layer kind: conv, dense (all activations),
/// max-pool, dropout under a fixed mask, and channel concat, all in f64.
/// Returns the worst relative error against central differences.
pub fn layer_suite_worst_error() -> f64 {
    use facerx_core::layers::{
        concat_channels, maxpool_backward, maxpool_forward, split_channels, Activation,
        ConvLayer, DenseLayer, DropoutLayer,
    };

    let mut worst: f64 = 0.0;
    let mut rng = Rng::new(4242);

    // Convolution: all kernel and bias entries, sampled input entries.
    let conv = ConvLayer::<f64>::new(3, 3, 2, 3, &mut rng).unwrap();
    let x = random_tensor(&mut rng, &[5, 5, 2], -1.0, 1.0);
    let (out, cache) = conv.forward(&x, Activation::Relu).unwrap();
    let w = random_tensor(&mut rng, out.shape(), -1.0, 1.0);
    let weighted = |t: &Tensor<f64>| -> f64 {
        t.data().iter().zip(w.data()).map(|(&a, &b)| a * b).sum()
    };
    let (grad_x, grads) = conv.backward(&w, &cache).unwrap();
    let mut kernels = conv.kernels.clone();
    for i in 0..kernels.len() {
        let numeric = central_difference(&mut kernels, i, FD_STEP, |k| {
            let probe = ConvLayer { kernels: k.clone(), bias: conv.bias.clone() };
            weighted(&probe.forward(&x, Activation::Relu).unwrap().0)
        });
        worst = worst.max(relative_error(numeric, grads.kernels.data()[i]));
    }
    let mut input = x.clone();
    for i in probe_positions(input.len(), 10) {
        let numeric = central_difference(&mut input, i, FD_STEP, |x| {
            weighted(&conv.forward(x, Activation::Relu).unwrap().0)
        });
        worst = worst.max(relative_error(numeric, grad_x.data()[i]));
    }

    // Dense with every activation.
    for activation in [Activation::None, Activation::Relu, Activation::Sigmoid] {
        let dense = DenseLayer::<f64>::new(8, 4, &mut rng).unwrap();
        let x = random_tensor(&mut rng, &[8], -1.0, 1.0);
        let (out, cache) = dense.forward(&x, activation).unwrap();
        let w = random_tensor(&mut rng, out.shape(), -1.0, 1.0);
        let weighted = |t: &Tensor<f64>| -> f64 {
            t.data().iter().zip(w.data()).map(|(&a, &b)| a * b).sum()
        };
        let (grad_x, grads) = dense.backward(&w, &cache).unwrap();
        let mut weights = dense.weights.clone();
        for i in 0..weights.len() {
            let numeric = central_difference(&mut weights, i, FD_STEP, |wm| {
                let probe = DenseLayer { weights: wm.clone(), bias: dense.bias.clone() };
                weighted(&probe.forward(&x, activation).unwrap().0)
            });
            worst = worst.max(relative_error(numeric, grads.weights.data()[i]));
        }
        let mut input = x.clone();
        for i in 0..input.len() {
            let numeric = central_difference(&mut input, i, FD_STEP, |x| {
                weighted(&dense.forward(x, activation).unwrap().0)
            });
            worst = worst.max(relative_error(numeric, grad_x.data()[i]));
        }
    }

    // Max-pool input gradient.
    let x = random_tensor(&mut rng, &[6, 6, 2], -1.0, 1.0);
    let (out, cache) = maxpool_forward(&x).unwrap();
    let w = random_tensor(&mut rng, out.shape(), -1.0, 1.0);
    let grad_x = maxpool_backward(&w, &cache).unwrap();
    let weighted = |t: &Tensor<f64>| -> f64 {
        t.data().iter().zip(w.data()).map(|(&a, &b)| a * b).sum()
    };
    let mut input = x.clone();
    for i in 0..input.len() {
        let numeric = central_difference(&mut input, i, FD_STEP, |x| {
            weighted(&maxpool_forward(x).unwrap().0)
        });
        worst = worst.max(relative_error(numeric, grad_x.data()[i]));
    }

    // Dropout under a fixed mask.
    let dropout = DropoutLayer::new(0.4).unwrap();
    let x = random_tensor(&mut rng, &[30], -1.0, 1.0);
    let (out, mask) = dropout.forward_train(&x, &mut Rng::new(5));
    let w = random_tensor(&mut rng, out.shape(), -1.0, 1.0);
    let weighted = |t: &Tensor<f64>| -> f64 {
        t.data().iter().zip(w.data()).map(|(&a, &b)| a * b).sum()
    };
    let grad_x = DropoutLayer::backward(&w, &mask).unwrap();
    let mut input = x.clone();
    for i in 0..input.len() {
        let numeric =
            central_difference(&mut input, i, FD_STEP, |x| weighted(&x.mul(&mask).unwrap()));
        worst = worst.max(relative_error(numeric, grad_x.data()[i]));
    }

    // Channel concat: backward is an exact split.
    let a = random_tensor(&mut rng, &[3, 3, 2], -1.0, 1.0);
    let b = random_tensor(&mut rng, &[3, 3, 3], -1.0, 1.0);
    let joined = concat_channels(&[&a, &b]).unwrap();
    let w = random_tensor(&mut rng, joined.shape(), -1.0, 1.0);
    let weighted = |t: &Tensor<f64>| -> f64 {
        t.data().iter().zip(w.data()).map(|(&x, &y)| x * y).sum()
    };
    let parts = split_channels(&w, &[2, 3]).unwrap();
    let mut input = a.clone();
    for i in 0..input.len() {
        let numeric = central_difference(&mut input, i, FD_STEP, |a| {
            weighted(&concat_channels(&[a, &b]).unwrap())
        });
        worst = worst.max(relative_error(numeric, parts[0].data()[i]));
    }

    worst
}

/// Worst relative error between analytic and central-difference gradients
/// over every parameter tensor of one architecture (probed at a spread of
/// positions), in f64 at s = 16, n = 5.
pub fn graph_worst_relative_error(arch: facerx_core::Architecture) -> f64 {
    use facerx_core::loss::{bce_logit_grad, bce_loss, summed_loss};
    use facerx_core::{Model, ModelInput};

    let (s, n) = (16usize, 5usize);
    let mut rng = Rng::new(707);
    let mut model = Model::<f64>::build(arch, n, s, &mut rng).unwrap();
    let input = ModelInput {
        face: random_tensor(&mut rng, &[s, s, 3], 0.0, 1.0),
        organs: (0..4).map(|_| random_tensor(&mut rng, &[s / 4, s / 4, 3], 0.0, 1.0)).collect(),
        regions: (0..3).map(|_| random_tensor(&mut rng, &[s / 2, s / 2, 3], 0.0, 1.0)).collect(),
    };
    let target = Tensor::from_vec(
        &[n],
        (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect(),
    )
    .unwrap();

    // Train-mode loss with a fixed dropout seed is a deterministic,
    // differentiable function of the parameters.
    let graph_loss = |model: &Model<f64>| {
        let (heads, _) = model.forward_train(&input, &mut Rng::new(99)).unwrap();
        match heads.len() {
            1 => bce_loss(&heads[0], &target).unwrap(),
            _ => summed_loss(&heads[0], &heads[1], &heads[2], &target).unwrap().total,
        }
    };

    let (heads, cache) = model.forward_train(&input, &mut Rng::new(99)).unwrap();
    let logit_grads: Vec<Tensor<f64>> =
        heads.iter().map(|h| bce_logit_grad(h, &target).unwrap()).collect();
    let analytic = model.backward(&cache, &logit_grads).unwrap();

    let mut worst: f64 = 0.0;
    let param_count = model.params().len();
    for p in 0..param_count {
        for i in probe_positions(model.params()[p].len(), 8) {
            let mut probe = model.params()[p].clone();
            let numeric = central_difference(&mut probe, i, FD_STEP, |tensor| {
                *model.params_mut()[p] = tensor.clone();
                graph_loss(&model)
            });
            *model.params_mut()[p] = probe;
            worst = worst.max(relative_error(numeric, analytic[p].data()[i]));
        }
    }
    worst
}
