//! Inverted dropout: kept units are scaled by 1/(1 - rate) at train time so
//! the expected activation is unchanged and inference is the identity.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct DropoutLayer {
    rate: f64,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        Ok(DropoutLayer { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Train-mode forward; the returned mask holds 0 for dropped units and
    /// the inverse keep probability for kept ones. Eval mode is the identity
    /// and needs no call.
    pub fn forward_train<E: Scalar>(&self, x: &Tensor<E>, rng: &mut Rng) -> (Tensor<E>, Tensor<E>) {
        if self.rate == 0.0 {
            let mask = Tensor::ones(x.shape()).expect("shape already validated");
            return (x.clone(), mask);
        }
        let keep_scale = E::from_f64(1.0 / (1.0 - self.rate));
        let mut mask = Tensor::zeros(x.shape()).expect("shape already validated");
        for m in mask.data_mut() {
            if !rng.bernoulli(self.rate) {
                *m = keep_scale;
            }
        }
        let out = x.mul(&mask).expect("mask shape matches input");
        (out, mask)
    }

    pub fn backward<E: Scalar>(grad_out: &Tensor<E>, mask: &Tensor<E>) -> Result<Tensor<E>> {
        grad_out.mul(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_one_rejected() {
        assert!(DropoutLayer::new(1.0).is_err());
        assert!(DropoutLayer::new(-0.1).is_err());
        assert!(DropoutLayer::new(0.999).is_ok());
    }

    #[test]
    fn rate_zero_is_identity_with_keep_mask() {
        let layer = DropoutLayer::new(0.0).unwrap();
        let x = Tensor::<f32>::from_vec(&[3], vec![1.0, -2.0, 3.0]).unwrap();
        let (out, mask) = layer.forward_train(&x, &mut Rng::new(1));
        assert_eq!(out, x);
        assert!(mask.data().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn train_mode_expectation_is_preserved() {
        // Monte Carlo estimate of E[output] for a constant-1 input at rate
        // 0.4: inverted scaling keeps the mean at 1 within ~3 standard
        // errors (sigma = sqrt(p/(1-p)) per unit).
        let layer = DropoutLayer::new(0.4).unwrap();
        let n = 100_000usize;
        let x = Tensor::<f64>::ones(&[n]).unwrap();
        let (out, _) = layer.forward_train(&x, &mut Rng::new(7));
        let mean = out.mean();
        let sigma = (0.4f64 / 0.6).sqrt() / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma + 0.01, "mean {mean}");
    }

    #[test]
    fn masks_reproduce_per_seed() {
        let layer = DropoutLayer::new(0.4).unwrap();
        let x = Tensor::<f32>::ones(&[64]).unwrap();
        let (a, _) = layer.forward_train(&x, &mut Rng::new(5));
        let (b, _) = layer.forward_train(&x, &mut Rng::new(5));
        assert_eq!(a, b);
    }

    #[test]
    fn backward_applies_same_mask() {
        let layer = DropoutLayer::new(0.5).unwrap();
        let x = Tensor::<f32>::ones(&[16]).unwrap();
        let (_, mask) = layer.forward_train(&x, &mut Rng::new(2));
        let g = Tensor::<f32>::ones(&[16]).unwrap();
        let gx = DropoutLayer::backward(&g, &mask).unwrap();
        assert_eq!(gx, mask);
    }
}
