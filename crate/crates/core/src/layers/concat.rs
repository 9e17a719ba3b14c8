//! Channel concatenation of feature maps with equal spatial extents.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Join (h, w, c_i) maps into (h, w, sum c_i), preserving input order.
pub fn concat_channels<E: Scalar>(xs: &[&Tensor<E>]) -> Result<Tensor<E>> {
    if xs.is_empty() {
        return Err(Error::InvalidShape("concat of zero tensors".into()));
    }
    let (h, w) = (xs[0].shape()[0], xs[0].shape()[1]);
    for (i, x) in xs.iter().enumerate() {
        if x.rank() != 3 {
            return Err(Error::InvalidShape(format!(
                "concat input {i} must be (h, w, channels), got {:?}",
                x.shape()
            )));
        }
        if x.shape()[0] != h || x.shape()[1] != w {
            return Err(Error::ShapeMismatch {
                expected: vec![h, w],
                actual: x.shape()[..2].to_vec(),
                context: format!("concat input {i} spatial extents"),
            });
        }
    }
    let total_c: usize = xs.iter().map(|x| x.shape()[2]).sum();
    let mut out = vec![E::ZERO; h * w * total_c];
    for hw in 0..h * w {
        let row = &mut out[hw * total_c..(hw + 1) * total_c];
        let mut offset = 0;
        for x in xs {
            let c = x.shape()[2];
            row[offset..offset + c].copy_from_slice(&x.data()[hw * c..(hw + 1) * c]);
            offset += c;
        }
    }
    Tensor::from_vec(&[h, w, total_c], out)
}

/// Inverse of `concat_channels`: split a (h, w, sum c_i) gradient into the
/// per-input slices.
pub fn split_channels<E: Scalar>(x: &Tensor<E>, channels: &[usize]) -> Result<Vec<Tensor<E>>> {
    let (h, w, total_c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let sum: usize = channels.iter().sum();
    if sum != total_c {
        return Err(Error::ShapeMismatch {
            expected: vec![sum],
            actual: vec![total_c],
            context: "split channel total".into(),
        });
    }
    let mut parts: Vec<Vec<E>> = channels.iter().map(|&c| Vec::with_capacity(h * w * c)).collect();
    for hw in 0..h * w {
        let row = &x.data()[hw * total_c..(hw + 1) * total_c];
        let mut offset = 0;
        for (part, &c) in parts.iter_mut().zip(channels) {
            part.extend_from_slice(&row[offset..offset + c]);
            offset += c;
        }
    }
    parts
        .into_iter()
        .zip(channels)
        .map(|(data, &c)| Tensor::from_vec(&[h, w, c], data))
        .collect()
}
