//! Multi-label binary cross-entropy, in the single-head form and the
//! three-head summed form used by the multi-scale network.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Loss of one forward pass: the optimized total plus the per-head terms.
#[derive(Debug, Clone)]
pub struct LossValue {
    pub total: f64,
    pub per_head: Vec<f64>,
}

/// Mean over labels of the per-label cross-entropy,
/// (1/n) * sum_i [-y_i ln p_i - (1 - y_i) ln(1 - p_i)],
/// with probabilities clipped away from 0 and 1 before the logs.
pub fn bce_loss<E: Scalar>(probs: &Tensor<E>, targets: &Tensor<E>) -> Result<f64> {
    if probs.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            expected: targets.shape().to_vec(),
            actual: probs.shape().to_vec(),
            context: "bce probabilities vs targets".into(),
        });
    }
    let n = probs.len() as f64;
    let mut acc = 0.0f64;
    for (&p, &y) in probs.data().iter().zip(targets.data()) {
        let p = p.clip_probability().to_f64();
        let y = y.to_f64();
        acc -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(acc / n)
}

/// Gradient of `bce_loss` with respect to the pre-sigmoid logits: since the
/// heads end in a sigmoid, d(loss)/d(logit_i) = (p_i - y_i) / n. The sigmoid
/// derivative cancels, so this fused form is exact and stable.
pub fn bce_logit_grad<E: Scalar>(probs: &Tensor<E>, targets: &Tensor<E>) -> Result<Tensor<E>> {
    if probs.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            expected: targets.shape().to_vec(),
            actual: probs.shape().to_vec(),
            context: "bce probabilities vs targets".into(),
        });
    }
    let inv_n = E::from_f64(1.0 / probs.len() as f64);
    let data = probs
        .data()
        .iter()
        .zip(targets.data())
        .map(|(&p, &y)| (p - y) * inv_n)
        .collect();
    Tensor::from_vec(probs.shape(), data)
}

/// Plain addition of the three head losses against the same target.
pub fn summed_loss<E: Scalar>(
    organ: &Tensor<E>,
    region: &Tensor<E>,
    face: &Tensor<E>,
    targets: &Tensor<E>,
) -> Result<LossValue> {
    let per_head = vec![
        bce_loss(organ, targets)?,
        bce_loss(region, targets)?,
        bce_loss(face, targets)?,
    ];
    Ok(LossValue { total: per_head.iter().sum(), per_head })
}
