//! facerx-core: a from-scratch training and inference engine that learns to
//! generate multi-label herbal prescriptions from face images.
//!
//! The crate builds everything from first principles on a dense [`Tensor`]
//! type: convolution via patch gathering and matrix multiplication,
//! max-pooling, dense layers, inverted dropout, and channel concatenation,
//! with hand-derived backward passes checked against central differences.
//! Two architectures are assembled from those pieces: a conventional
//! three-stage CNN and a multi-scale network that fuses organ crops, local
//! region crops, and the whole face, trained with one loss per output head.
//!
//! The [`data`] module handles herb dictionaries, prescription encoding,
//! face segmentation, affine augmentation, dataset files, and a synthetic
//! planted-signal generator whose labels are decodable by a pixel rule
//! before any training. The [`harness`] module provides the training loop
//! with early stopping, multi-label metrics, threshold decoding, and the
//! 5-fold evaluation protocol.

pub mod data;
pub mod error;
pub mod harness;
pub mod layers;
pub mod linalg;
pub mod loss;
pub mod models;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod tensor;
pub mod util;

pub use error::{Error, Result};
pub use rng::Rng;
pub use scalar::Scalar;
pub use tensor::Tensor;

pub use models::{Architecture, Model, ModelInput};
