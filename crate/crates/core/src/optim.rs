//! Stochastic gradient descent with momentum and learning-rate decay.
//!
//! The decay schedule is the classic per-update hyperbolic one,
//! eta_t = eta_0 / (1 + decay * t), matching the (lr, decay, momentum)
//! triple the training setup quotes.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f32,
    pub decay: f32,
    pub momentum: f32,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig { learning_rate: 0.01, decay: 1e-6, momentum: 0.9 }
    }
}

/// Per-parameter velocities plus the update counter driving the decay.
#[derive(Debug, Clone)]
pub struct SgdState {
    pub config: SgdConfig,
    pub velocities: Vec<Tensor<f32>>,
    pub step_count: u64,
}

impl SgdState {
    /// Velocities start at zero, mirroring the parameter shapes.
    pub fn new(config: SgdConfig, params: &[&Tensor<f32>]) -> Result<Self> {
        let velocities = params
            .iter()
            .map(|p| Tensor::zeros(p.shape()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SgdState { config, velocities, step_count: 0 })
    }

    /// Current learning rate, before this step's update.
    pub fn learning_rate(&self) -> f32 {
        self.config.learning_rate / (1.0 + self.config.decay * self.step_count as f32)
    }

    /// One update over all parameters:
    /// v <- momentum * v - eta_t * g; w <- w + v.
    /// The step counter advances once per call (one call per batch).
    pub fn step(&mut self, params: &mut [&mut Tensor<f32>], grads: &[Tensor<f32>]) -> Result<()> {
        if params.len() != self.velocities.len() || grads.len() != self.velocities.len() {
            return Err(Error::Config(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.velocities.len(),
                params.len(),
                grads.len()
            )));
        }
        let eta = self.learning_rate();
        let mu = self.config.momentum;
        for ((param, grad), velocity) in params.iter_mut().zip(grads).zip(&mut self.velocities) {
            if param.shape() != grad.shape() {
                return Err(Error::ShapeMismatch {
                    expected: param.shape().to_vec(),
                    actual: grad.shape().to_vec(),
                    context: "sgd parameter vs gradient".into(),
                });
            }
            for ((w, &g), v) in
                param.data_mut().iter_mut().zip(grad.data()).zip(velocity.data_mut())
            {
                *v = mu * *v - eta * g;
                *w += *v;
            }
        }
        self.step_count += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f32) -> Tensor<f32> {
        Tensor::from_vec(&[1], vec![v]).unwrap()
    }

    #[test]
    fn plain_gradient_descent_step() {
        let config = SgdConfig { learning_rate: 0.1, decay: 0.0, momentum: 0.0 };
        let mut w = scalar_param(0.0);
        let mut state = SgdState::new(config, &[&w]).unwrap();
        state.step(&mut [&mut w], &[scalar_param(1.0)]).unwrap();
        assert!((w.data()[0] + 0.1).abs() < 1e-7);
    }

    #[test]
    fn momentum_accumulates_velocity() {
        // mu=0.9, eta=0.1, g=1 twice from w=0:
        // v1 = -0.1, w1 = -0.1; v2 = -0.19, w2 = -0.29.
        let config = SgdConfig { learning_rate: 0.1, decay: 0.0, momentum: 0.9 };
        let mut w = scalar_param(0.0);
        let mut state = SgdState::new(config, &[&w]).unwrap();
        state.step(&mut [&mut w], &[scalar_param(1.0)]).unwrap();
        assert!((w.data()[0] + 0.1).abs() < 1e-7);
        state.step(&mut [&mut w], &[scalar_param(1.0)]).unwrap();
        assert!((w.data()[0] + 0.29).abs() < 1e-7);
        assert!((state.velocities[0].data()[0] + 0.19).abs() < 1e-7);
        assert_eq!(state.step_count, 2);
    }

    #[test]
    fn zero_gradient_zero_velocity_is_a_fixed_point() {
        let mut w = scalar_param(1.5);
        let mut state = SgdState::new(SgdConfig::default(), &[&w]).unwrap();
        state.step(&mut [&mut w], &[scalar_param(0.0)]).unwrap();
        assert_eq!(w.data()[0], 1.5);
    }

    #[test]
    fn decay_shrinks_learning_rate() {
        let config = SgdConfig { learning_rate: 0.01, decay: 0.5, momentum: 0.0 };
        let mut w = scalar_param(0.0);
        let mut state = SgdState::new(config, &[&w]).unwrap();
        assert_eq!(state.learning_rate(), 0.01);
        state.step(&mut [&mut w], &[scalar_param(0.0)]).unwrap();
        assert!((state.learning_rate() - 0.01 / 1.5).abs() < 1e-9);
        state.step(&mut [&mut w], &[scalar_param(0.0)]).unwrap();
        assert!((state.learning_rate() - 0.01 / 2.0).abs() < 1e-9);
    }

    #[test]
    fn descends_a_convex_quadratic_monotonically() {
        // f(w) = 0.5 * w^2, gradient w; loss must decrease every step.
        let config = SgdConfig { learning_rate: 0.05, decay: 0.0, momentum: 0.0 };
        let mut w = scalar_param(3.0);
        let mut state = SgdState::new(config, &[&w]).unwrap();
        let mut prev = 0.5 * 3.0f32 * 3.0;
        for _ in 0..100 {
            let g = scalar_param(w.data()[0]);
            state.step(&mut [&mut w], &[g]).unwrap();
            let loss = 0.5 * w.data()[0] * w.data()[0];
            assert!(loss < prev, "loss {loss} did not decrease from {prev}");
            prev = loss;
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut w = scalar_param(0.0);
        let mut state = SgdState::new(SgdConfig::default(), &[&w]).unwrap();
        let bad = Tensor::<f32>::zeros(&[2]).unwrap();
        assert!(state.step(&mut [&mut w], &[bad]).is_err());
    }
}
