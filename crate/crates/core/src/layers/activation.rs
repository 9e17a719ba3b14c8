use crate::scalar::Scalar;

/// Activation applied after a convolution or dense affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<E: Scalar>(self, v: E) -> E {
        match self {
            Activation::None => v,
            Activation::Relu => v.maximum(E::ZERO),
            Activation::Sigmoid => sigmoid(v),
        }
    }

    /// Derivative expressed through the activation output (not the
    /// pre-activation), which is what the caches store.
    #[inline]
    pub fn grad_from_output<E: Scalar>(self, out: E) -> E {
        match self {
            Activation::None => E::ONE,
            Activation::Relu => {
                if out > E::ZERO {
                    E::ONE
                } else {
                    E::ZERO
                }
            }
            Activation::Sigmoid => out * (E::ONE - out),
        }
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid<E: Scalar>(v: E) -> E {
    if v >= E::ZERO {
        E::ONE / (E::ONE + (-v).exp())
    } else {
        let e = v.exp();
        e / (E::ONE + e)
    }
}

/// Sigmoid clamped strictly inside (0, 1); used for head probabilities.
#[inline]
pub fn sigmoid_probability<E: Scalar>(v: E) -> E {
    sigmoid(v).clip_probability()
}
