//! Shared fixtures for the kernel and model benchmarks.

use facerx_core::models::ModelInput;
use facerx_core::{Rng, Tensor};

/// A random face plus crops for an s-sized three-grained input.
pub fn random_input(s: usize, seed: u64) -> ModelInput<f32> {
    let mut rng = Rng::new(seed);
    ModelInput {
        face: Tensor::uniform(&mut rng, &[s, s, 3], 0.0, 1.0).unwrap(),
        organs: (0..4)
            .map(|_| Tensor::uniform(&mut rng, &[s / 4, s / 4, 3], 0.0, 1.0).unwrap())
            .collect(),
        regions: (0..3)
            .map(|_| Tensor::uniform(&mut rng, &[s / 2, s / 2, 3], 0.0, 1.0).unwrap())
            .collect(),
    }
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Vec<f32> {
    let mut rng = Rng::new(seed);
    (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0) as f32).collect()
}
