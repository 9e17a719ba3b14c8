//! Layer forward and backward passes.
//!
//! Every layer is a pure function of (input, parameters, rng state): forward
//! returns the output plus a cache holding exactly what backward needs, and
//! backward returns analytic gradients of the forward definition. Gradient
//! correctness is pinned by central-difference checks in the test suite.

mod activation;
mod concat;
mod conv;
mod dense;
mod dropout;
mod pool;

pub use activation::{sigmoid, sigmoid_probability, Activation};
pub use concat::{concat_channels, split_channels};
pub use conv::{ConvCache, ConvGrads, ConvLayer};
pub use dense::{DenseCache, DenseGrads, DenseLayer};
pub use dropout::DropoutLayer;
pub use pool::{maxpool_backward, maxpool_forward, PoolCache};

use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Glorot-style uniform initialization in +-sqrt(6 / (fan_in + fan_out)).
pub(crate) fn glorot_uniform<E: Scalar>(
    rng: &mut Rng,
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
) -> crate::error::Result<Tensor<E>> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::uniform(rng, shape, -limit, limit)
}
