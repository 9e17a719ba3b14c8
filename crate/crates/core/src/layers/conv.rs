//! Same-padding stride-1 convolution via patch gathering (im2col) and a
//! matrix multiply. This is the hot path of training; the bench crate tracks
//! its throughput.

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_at, matmul_bt};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::activation::Activation;
use super::glorot_uniform;

/// Convolution parameters: kernels (kh, kw, in_ch, out_ch) plus one bias per
/// output channel. Stride is 1 and padding preserves the spatial extents.
#[derive(Debug, Clone)]
pub struct ConvLayer<E: Scalar = f32> {
    pub kernels: Tensor<E>,
    pub bias: Tensor<E>,
}

/// Forward state kept for the backward pass.
#[derive(Debug)]
pub struct ConvCache<E: Scalar = f32> {
    /// Gathered patches, (h*w) x (kh*kw*in_ch).
    col: Vec<E>,
    /// Post-activation output (the relu mask is recovered from its sign).
    out: Tensor<E>,
    activation: Activation,
    input_shape: [usize; 3],
}

#[derive(Debug)]
pub struct ConvGrads<E: Scalar = f32> {
    pub kernels: Tensor<E>,
    pub bias: Tensor<E>,
}

impl<E: Scalar> ConvLayer<E> {
    /// Glorot-initialized kernels, zero bias. Kernel extents must be odd so
    /// that same-padding is symmetric.
    pub fn new(kh: usize, kw: usize, in_ch: usize, out_ch: usize, rng: &mut Rng) -> Result<Self> {
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(Error::Config(format!(
                "kernel extents must be odd for same padding, got {kh}x{kw}"
            )));
        }
        let fan_in = kh * kw * in_ch;
        let fan_out = kh * kw * out_ch;
        Ok(ConvLayer {
            kernels: glorot_uniform(rng, &[kh, kw, in_ch, out_ch], fan_in, fan_out)?,
            bias: Tensor::zeros(&[out_ch])?,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[3]
    }

    /// Forward pass on one (h, w, in_ch) image.
    pub fn forward(&self, x: &Tensor<E>, activation: Activation) -> Result<(Tensor<E>, ConvCache<E>)> {
        if x.rank() != 3 {
            return Err(Error::InvalidShape(format!(
                "conv expects (h, w, channels), got {:?}",
                x.shape()
            )));
        }
        let [kh, kw, in_ch, out_ch] = [
            self.kernels.shape()[0],
            self.kernels.shape()[1],
            self.kernels.shape()[2],
            self.kernels.shape()[3],
        ];
        let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if c != in_ch {
            return Err(Error::ShapeMismatch {
                expected: vec![h, w, in_ch],
                actual: x.shape().to_vec(),
                context: "conv input channels".into(),
            });
        }

        let col = im2col(x, kh, kw);
        let pixels = h * w;
        let patch = kh * kw * in_ch;
        let mut out_data = matmul(&col, self.kernels.data(), pixels, patch, out_ch);

        let bias = self.bias.data();
        for row in out_data.chunks_exact_mut(out_ch) {
            for (v, &b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
        if activation != Activation::None {
            for v in &mut out_data {
                *v = activation.apply(*v);
            }
        }

        let out = Tensor::from_vec(&[h, w, out_ch], out_data)?;
        let cache = ConvCache { col, out: out.clone(), activation, input_shape: [h, w, in_ch] };
        Ok((out, cache))
    }

    /// Forward pass on a (n, h, w, in_ch) batch; items are processed
    /// independently.
    pub fn forward_batch(
        &self,
        x: &Tensor<E>,
        activation: Activation,
    ) -> Result<(Tensor<E>, Vec<ConvCache<E>>)> {
        if x.rank() != 4 {
            return Err(Error::InvalidShape(format!(
                "batched conv expects (n, h, w, channels), got {:?}",
                x.shape()
            )));
        }
        let (n, h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let item_len = h * w * c;
        let mut outs = Vec::new();
        let mut caches = Vec::with_capacity(n);
        for i in 0..n {
            let item =
                Tensor::from_vec(&[h, w, c], x.data()[i * item_len..(i + 1) * item_len].to_vec())?;
            let (out, cache) = self.forward(&item, activation)?;
            outs.extend_from_slice(out.data());
            caches.push(cache);
        }
        let out_ch = self.out_channels();
        Ok((Tensor::from_vec(&[n, h, w, out_ch], outs)?, caches))
    }

    /// Gradients of the forward definition; returns the input gradient
    /// alongside the parameter gradients.
    pub fn backward(
        &self,
        grad_out: &Tensor<E>,
        cache: &ConvCache<E>,
    ) -> Result<(Tensor<E>, ConvGrads<E>)> {
        let (grad_x, grads) = self.backward_impl(grad_out, cache, true)?;
        Ok((grad_x.expect("input gradient requested"), grads))
    }

    /// Parameter gradients only; for convolutions whose input is a raw
    /// image, where the input gradient would be discarded.
    pub fn backward_params(
        &self,
        grad_out: &Tensor<E>,
        cache: &ConvCache<E>,
    ) -> Result<ConvGrads<E>> {
        Ok(self.backward_impl(grad_out, cache, false)?.1)
    }

    fn backward_impl(
        &self,
        grad_out: &Tensor<E>,
        cache: &ConvCache<E>,
        need_input_grad: bool,
    ) -> Result<(Option<Tensor<E>>, ConvGrads<E>)> {
        if grad_out.shape() != cache.out.shape() {
            return Err(Error::ShapeMismatch {
                expected: cache.out.shape().to_vec(),
                actual: grad_out.shape().to_vec(),
                context: "conv grad_out".into(),
            });
        }
        let [kh, kw, in_ch, out_ch] = [
            self.kernels.shape()[0],
            self.kernels.shape()[1],
            self.kernels.shape()[2],
            self.kernels.shape()[3],
        ];
        let [h, w, _] = cache.input_shape;
        let pixels = h * w;
        let patch = kh * kw * in_ch;

        // Gradient w.r.t. the pre-activation values.
        let mut grad_pre = grad_out.data().to_vec();
        if cache.activation != Activation::None {
            for (g, &o) in grad_pre.iter_mut().zip(cache.out.data()) {
                *g *= cache.activation.grad_from_output(o);
            }
        }

        let mut grad_bias = vec![E::ZERO; out_ch];
        for row in grad_pre.chunks_exact(out_ch) {
            for (b, &g) in grad_bias.iter_mut().zip(row) {
                *b += g;
            }
        }

        let grad_kernels = matmul_at(&cache.col, &grad_pre, pixels, patch, out_ch);
        let grad_x = if need_input_grad {
            let grad_col = matmul_bt(&grad_pre, self.kernels.data(), pixels, out_ch, patch);
            let grad_x = col2im(&grad_col, h, w, in_ch, kh, kw);
            Some(Tensor::from_vec(&[h, w, in_ch], grad_x)?)
        } else {
            None
        };

        Ok((
            grad_x,
            ConvGrads {
                kernels: Tensor::from_vec(&[kh, kw, in_ch, out_ch], grad_kernels)?,
                bias: Tensor::from_vec(&[out_ch], grad_bias)?,
            },
        ))
    }
}

/// Gather kh x kw patches around every pixel (zero padding outside) into a
/// (h*w) x (kh*kw*c) row-major matrix.
fn im2col<E: Scalar>(x: &Tensor<E>, kh: usize, kw: usize) -> Vec<E> {
    let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (pad_h, pad_w) = (kh / 2, kw / 2);
    let patch = kh * kw * c;
    let data = x.data();
    let mut col = vec![E::ZERO; h * w * patch];

    for oh in 0..h {
        for ow in 0..w {
            let row = &mut col[(oh * w + ow) * patch..(oh * w + ow + 1) * patch];
            for dy in 0..kh {
                let ih = oh as isize + dy as isize - pad_h as isize;
                if ih < 0 || ih >= h as isize {
                    continue;
                }
                for dx in 0..kw {
                    let iw = ow as isize + dx as isize - pad_w as isize;
                    if iw < 0 || iw >= w as isize {
                        continue;
                    }
                    let src = ((ih as usize * w) + iw as usize) * c;
                    let dst = (dy * kw + dx) * c;
                    row[dst..dst + c].copy_from_slice(&data[src..src + c]);
                }
            }
        }
    }
    col
}

/// Scatter-add a patch-gradient matrix back onto the input grid; the adjoint
/// of `im2col`.
fn col2im<E: Scalar>(col: &[E], h: usize, w: usize, c: usize, kh: usize, kw: usize) -> Vec<E> {
    let (pad_h, pad_w) = (kh / 2, kw / 2);
    let patch = kh * kw * c;
    let mut x = vec![E::ZERO; h * w * c];

    for oh in 0..h {
        for ow in 0..w {
            let row = &col[(oh * w + ow) * patch..(oh * w + ow + 1) * patch];
            for dy in 0..kh {
                let ih = oh as isize + dy as isize - pad_h as isize;
                if ih < 0 || ih >= h as isize {
                    continue;
                }
                for dx in 0..kw {
                    let iw = ow as isize + dx as isize - pad_w as isize;
                    if iw < 0 || iw >= w as isize {
                        continue;
                    }
                    let dst = ((ih as usize * w) + iw as usize) * c;
                    let src = (dy * kw + dx) * c;
                    for ch in 0..c {
                        x[dst + ch] += row[src + ch];
                    }
                }
            }
        }
    }
    x
}
