//! The baseline architecture: three conv+pool stages (32, 64, 128 kernels),
//! a 256-unit dense encoder, and one sigmoid output head over the herb
//! dictionary.

use crate::error::{Error, Result};
use crate::layers::{
    maxpool_backward, maxpool_forward, Activation, ConvCache, ConvLayer, DenseCache, DenseLayer,
    PoolCache,
};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::sigmoid_probs;

#[derive(Debug, Clone)]
pub struct ConventionalCnn<E: Scalar = f32> {
    input_size: usize,
    herb_count: usize,
    conv1: ConvLayer<E>,
    conv2: ConvLayer<E>,
    conv3: ConvLayer<E>,
    encoder: DenseLayer<E>,
    head: DenseLayer<E>,
}

pub struct ConventionalCache<E: Scalar = f32> {
    conv1: ConvCache<E>,
    pool1: PoolCache,
    conv2: ConvCache<E>,
    pool2: PoolCache,
    conv3: ConvCache<E>,
    pool3: PoolCache,
    encoder: DenseCache<E>,
    head: DenseCache<E>,
    feature_shape: Vec<usize>,
}

impl<E: Scalar> ConventionalCnn<E> {
    /// Build with Glorot-initialized weights for an `s` x `s` x 3 face and
    /// `herb_count` output probabilities. `s` must be divisible by 8 so the
    /// three pooling stages land on whole pixels.
    pub fn build(herb_count: usize, s: usize, rng: &mut Rng) -> Result<Self> {
        if s == 0 || s % 8 != 0 {
            return Err(Error::Config(format!(
                "input size must be a positive multiple of 8, got {s}"
            )));
        }
        if herb_count == 0 {
            return Err(Error::Config("herb count must be positive".into()));
        }
        let feature_len = (s / 8) * (s / 8) * 128;
        Ok(ConventionalCnn {
            input_size: s,
            herb_count,
            conv1: ConvLayer::new(3, 3, 3, 32, rng)?,
            conv2: ConvLayer::new(3, 3, 32, 64, rng)?,
            conv3: ConvLayer::new(3, 3, 64, 128, rng)?,
            encoder: DenseLayer::new(feature_len, 256, rng)?,
            head: DenseLayer::new(256, herb_count, rng)?,
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn herb_count(&self) -> usize {
        self.herb_count
    }

    fn check_input(&self, face: &Tensor<E>) -> Result<()> {
        let s = self.input_size;
        if face.shape() != [s, s, 3] {
            return Err(Error::ShapeMismatch {
                expected: vec![s, s, 3],
                actual: face.shape().to_vec(),
                context: "face branch input".into(),
            });
        }
        Ok(())
    }

    /// Forward pass returning head probabilities (strictly inside (0, 1))
    /// and the cache for `backward`. The conventional network has no
    /// dropout, so train and eval passes coincide.
    pub fn forward(&self, face: &Tensor<E>) -> Result<(Tensor<E>, ConventionalCache<E>)> {
        self.check_input(face)?;
        let (c1, conv1) = self.conv1.forward(face, Activation::Relu)?;
        let (p1, pool1) = maxpool_forward(&c1)?;
        let (c2, conv2) = self.conv2.forward(&p1, Activation::Relu)?;
        let (p2, pool2) = maxpool_forward(&c2)?;
        let (c3, conv3) = self.conv3.forward(&p2, Activation::Relu)?;
        let (p3, pool3) = maxpool_forward(&c3)?;
        let feature_shape = p3.shape().to_vec();
        let (enc, encoder) = self.encoder.forward(&p3.flatten(), Activation::Relu)?;
        let (logits, head) = self.head.forward(&enc, Activation::None)?;
        let probs = sigmoid_probs(&logits);
        let cache = ConventionalCache {
            conv1,
            pool1,
            conv2,
            pool2,
            conv3,
            pool3,
            encoder,
            head,
            feature_shape,
        };
        Ok((probs, cache))
    }

    /// Probabilities only.
    pub fn predict(&self, face: &Tensor<E>) -> Result<Tensor<E>> {
        Ok(self.forward(face)?.0)
    }

    /// Gradients for every parameter, in `param_names` order, given the loss
    /// gradient with respect to the head logits.
    pub fn backward(
        &self,
        cache: &ConventionalCache<E>,
        grad_logits: &Tensor<E>,
    ) -> Result<Vec<Tensor<E>>> {
        let (d_enc, head_grads) = self.head.backward(grad_logits, &cache.head)?;
        let (d_feat, encoder_grads) = self.encoder.backward(&d_enc, &cache.encoder)?;
        let d_p3 = d_feat.reshape(&cache.feature_shape)?;
        let d_c3 = maxpool_backward(&d_p3, &cache.pool3)?;
        let (d_p2, conv3_grads) = self.conv3.backward(&d_c3, &cache.conv3)?;
        let d_c2 = maxpool_backward(&d_p2, &cache.pool2)?;
        let (d_p1, conv2_grads) = self.conv2.backward(&d_c2, &cache.conv2)?;
        let d_c1 = maxpool_backward(&d_p1, &cache.pool1)?;
        let conv1_grads = self.conv1.backward_params(&d_c1, &cache.conv1)?;

        Ok(vec![
            conv1_grads.kernels,
            conv1_grads.bias,
            conv2_grads.kernels,
            conv2_grads.bias,
            conv3_grads.kernels,
            conv3_grads.bias,
            encoder_grads.weights,
            encoder_grads.bias,
            head_grads.weights,
            head_grads.bias,
        ])
    }

    pub fn param_names(&self) -> Vec<String> {
        [
            "conv1.kernels",
            "conv1.bias",
            "conv2.kernels",
            "conv2.bias",
            "conv3.kernels",
            "conv3.bias",
            "encoder.weights",
            "encoder.bias",
            "head.weights",
            "head.bias",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    pub fn params(&self) -> Vec<&Tensor<E>> {
        vec![
            &self.conv1.kernels,
            &self.conv1.bias,
            &self.conv2.kernels,
            &self.conv2.bias,
            &self.conv3.kernels,
            &self.conv3.bias,
            &self.encoder.weights,
            &self.encoder.bias,
            &self.head.weights,
            &self.head.bias,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<E>> {
        vec![
            &mut self.conv1.kernels,
            &mut self.conv1.bias,
            &mut self.conv2.kernels,
            &mut self.conv2.bias,
            &mut self.conv3.kernels,
            &mut self.conv3.bias,
            &mut self.encoder.weights,
            &mut self.encoder.bias,
            &mut self.head.weights,
            &mut self.head.bias,
        ]
    }

    pub fn cast<T: Scalar>(&self) -> ConventionalCnn<T> {
        ConventionalCnn {
            input_size: self.input_size,
            herb_count: self.herb_count,
            conv1: ConvLayer { kernels: self.conv1.kernels.cast(), bias: self.conv1.bias.cast() },
            conv2: ConvLayer { kernels: self.conv2.kernels.cast(), bias: self.conv2.bias.cast() },
            conv3: ConvLayer { kernels: self.conv3.kernels.cast(), bias: self.conv3.bias.cast() },
            encoder: DenseLayer {
                weights: self.encoder.weights.cast(),
                bias: self.encoder.bias.cast(),
            },
            head: DenseLayer { weights: self.head.weights.cast(), bias: self.head.bias.cast() },
        }
    }
}
