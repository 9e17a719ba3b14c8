//! Fully connected layer: y = activation(x W + b).

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_at, matmul_bt};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::activation::Activation;
use super::glorot_uniform;

/// Weights are (in_dim, out_dim); bias is (out_dim).
#[derive(Debug, Clone)]
pub struct DenseLayer<E: Scalar = f32> {
    pub weights: Tensor<E>,
    pub bias: Tensor<E>,
}

#[derive(Debug)]
pub struct DenseCache<E: Scalar = f32> {
    input: Vec<E>,
    out: Tensor<E>,
    activation: Activation,
}

#[derive(Debug)]
pub struct DenseGrads<E: Scalar = f32> {
    pub weights: Tensor<E>,
    pub bias: Tensor<E>,
}

impl<E: Scalar> DenseLayer<E> {
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Result<Self> {
        Ok(DenseLayer {
            weights: glorot_uniform(rng, &[in_dim, out_dim], in_dim, out_dim)?,
            bias: Tensor::zeros(&[out_dim])?,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    /// Forward pass; the input is used flattened and must match `in_dim`.
    pub fn forward(&self, x: &Tensor<E>, activation: Activation) -> Result<(Tensor<E>, DenseCache<E>)> {
        let (in_dim, out_dim) = (self.in_dim(), self.out_dim());
        if x.len() != in_dim {
            return Err(Error::ShapeMismatch {
                expected: vec![in_dim],
                actual: vec![x.len()],
                context: "dense input length".into(),
            });
        }
        let mut out_data = matmul(x.data(), self.weights.data(), 1, in_dim, out_dim);
        for (v, &b) in out_data.iter_mut().zip(self.bias.data()) {
            *v = activation.apply(*v + b);
        }
        let out = Tensor::from_vec(&[out_dim], out_data)?;
        let cache = DenseCache { input: x.data().to_vec(), out: out.clone(), activation };
        Ok((out, cache))
    }

    pub fn backward(
        &self,
        grad_out: &Tensor<E>,
        cache: &DenseCache<E>,
    ) -> Result<(Tensor<E>, DenseGrads<E>)> {
        let (in_dim, out_dim) = (self.in_dim(), self.out_dim());
        if grad_out.len() != out_dim {
            return Err(Error::ShapeMismatch {
                expected: vec![out_dim],
                actual: vec![grad_out.len()],
                context: "dense grad_out".into(),
            });
        }
        let mut grad_pre = grad_out.data().to_vec();
        if cache.activation != Activation::None {
            for (g, &o) in grad_pre.iter_mut().zip(cache.out.data()) {
                *g *= cache.activation.grad_from_output(o);
            }
        }
        let grad_weights = matmul_at(&cache.input, &grad_pre, 1, in_dim, out_dim);
        let grad_x = matmul_bt(&grad_pre, self.weights.data(), 1, out_dim, in_dim);
        Ok((
            Tensor::from_vec(&[in_dim], grad_x)?,
            DenseGrads {
                weights: Tensor::from_vec(&[in_dim, out_dim], grad_weights)?,
                bias: Tensor::from_vec(&[out_dim], grad_pre)?,
            },
        ))
    }
}
