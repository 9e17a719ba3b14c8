//! 2x2 max-pooling with stride 2. Odd trailing rows or columns are
//! truncated. The backward pass routes each gradient to the argmax position
//! of its window.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Flat input index of the winning element for every output element.
#[derive(Debug)]
pub struct PoolCache {
    argmax: Vec<u32>,
    input_shape: [usize; 3],
}

pub fn maxpool_forward<E: Scalar>(x: &Tensor<E>) -> Result<(Tensor<E>, PoolCache)> {
    if x.rank() != 3 {
        return Err(Error::InvalidShape(format!(
            "maxpool expects (h, w, channels), got {:?}",
            x.shape()
        )));
    }
    let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(Error::InvalidShape(format!(
            "spatial extents {h}x{w} too small for 2x2 pooling"
        )));
    }
    let data = x.data();
    let mut out = vec![E::ZERO; oh * ow * c];
    let mut argmax = vec![0u32; oh * ow * c];

    for y in 0..oh {
        for xw in 0..ow {
            for ch in 0..c {
                let mut best_idx = ((2 * y) * w + 2 * xw) * c + ch;
                let mut best = data[best_idx];
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = ((2 * y + dy) * w + 2 * xw + dx) * c + ch;
                    if data[idx] > best {
                        best = data[idx];
                        best_idx = idx;
                    }
                }
                let o = (y * ow + xw) * c + ch;
                out[o] = best;
                argmax[o] = best_idx as u32;
            }
        }
    }

    Ok((
        Tensor::from_vec(&[oh, ow, c], out)?,
        PoolCache { argmax, input_shape: [h, w, c] },
    ))
}

pub fn maxpool_backward<E: Scalar>(grad_out: &Tensor<E>, cache: &PoolCache) -> Result<Tensor<E>> {
    if grad_out.len() != cache.argmax.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![cache.argmax.len()],
            actual: vec![grad_out.len()],
            context: "maxpool grad_out".into(),
        });
    }
    let [h, w, c] = cache.input_shape;
    let mut grad_x = vec![E::ZERO; h * w * c];
    for (&g, &idx) in grad_out.data().iter().zip(&cache.argmax) {
        grad_x[idx as usize] += g;
    }
    Tensor::from_vec(&[h, w, c], grad_x)
}
