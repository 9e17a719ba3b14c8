//! The two prescription-generation architectures, assembled from the layer
//! primitives, plus checkpoint serialization.

mod checkpoint;
mod conventional;
mod three_grained;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use conventional::{ConventionalCache, ConventionalCnn};
pub use three_grained::{ThreeGrainedCache, ThreeGrainedCnn, DROPOUT_RATE};

use crate::error::{Error, Result};
use crate::layers::sigmoid_probability;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Which network is being trained or served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Conventional,
    ThreeGrained,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Conventional => "conventional",
            Architecture::ThreeGrained => "three-grained",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(Architecture::Conventional),
            "three-grained" => Ok(Architecture::ThreeGrained),
            other => Err(Error::Config(format!(
                "unknown architecture {other:?}; expected \"conventional\" or \"three-grained\""
            ))),
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One sample's tensors: the face plus its seven crops. The conventional
/// network reads only the face; the three-grained network reads all eight.
#[derive(Debug, Clone)]
pub struct ModelInput<E: Scalar = f32> {
    pub face: Tensor<E>,
    /// Left eye, right eye, nose, mouth; each (s/4, s/4, 3).
    pub organs: Vec<Tensor<E>>,
    /// Left cheek, right cheek, chin; each (s/2, s/2, 3).
    pub regions: Vec<Tensor<E>>,
}

/// Head probabilities: sigmoid clamped strictly inside (0, 1) so downstream
/// logs and comparisons never see the closed endpoints.
pub(crate) fn sigmoid_probs<E: Scalar>(logits: &Tensor<E>) -> Tensor<E> {
    logits.map(sigmoid_probability)
}

/// Either architecture behind one training/evaluation surface. The last
/// head is always the decision output.
#[derive(Debug, Clone)]
pub enum Model<E: Scalar = f32> {
    Conventional(ConventionalCnn<E>),
    ThreeGrained(ThreeGrainedCnn<E>),
}

pub enum ModelCache<E: Scalar = f32> {
    Conventional(ConventionalCache<E>),
    ThreeGrained(ThreeGrainedCache<E>),
}

impl<E: Scalar> Model<E> {
    pub fn build(arch: Architecture, herb_count: usize, s: usize, rng: &mut Rng) -> Result<Self> {
        Ok(match arch {
            Architecture::Conventional => {
                Model::Conventional(ConventionalCnn::build(herb_count, s, rng)?)
            }
            Architecture::ThreeGrained => {
                Model::ThreeGrained(ThreeGrainedCnn::build(herb_count, s, rng)?)
            }
        })
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            Model::Conventional(_) => Architecture::Conventional,
            Model::ThreeGrained(_) => Architecture::ThreeGrained,
        }
    }

    pub fn input_size(&self) -> usize {
        match self {
            Model::Conventional(m) => m.input_size(),
            Model::ThreeGrained(m) => m.input_size(),
        }
    }

    pub fn herb_count(&self) -> usize {
        match self {
            Model::Conventional(m) => m.herb_count(),
            Model::ThreeGrained(m) => m.herb_count(),
        }
    }

    pub fn head_count(&self) -> usize {
        match self {
            Model::Conventional(_) => 1,
            Model::ThreeGrained(_) => 3,
        }
    }

    /// Train-mode forward: dropout active where the architecture has it.
    pub fn forward_train(
        &self,
        input: &ModelInput<E>,
        rng: &mut Rng,
    ) -> Result<(Vec<Tensor<E>>, ModelCache<E>)> {
        match self {
            Model::Conventional(m) => {
                let (probs, cache) = m.forward(&input.face)?;
                Ok((vec![probs], ModelCache::Conventional(cache)))
            }
            Model::ThreeGrained(m) => {
                let (heads, cache) = m.forward(input, Some(rng))?;
                Ok((heads, ModelCache::ThreeGrained(cache)))
            }
        }
    }

    /// Eval-mode head probabilities.
    pub fn forward_eval(&self, input: &ModelInput<E>) -> Result<Vec<Tensor<E>>> {
        match self {
            Model::Conventional(m) => Ok(vec![m.predict(&input.face)?]),
            Model::ThreeGrained(m) => m.predict(input),
        }
    }

    /// The decision head's probabilities (the only head for the
    /// conventional network, P_face for the three-grained one).
    pub fn decision_probs(&self, input: &ModelInput<E>) -> Result<Tensor<E>> {
        let mut heads = self.forward_eval(input)?;
        Ok(heads.pop().expect("every architecture has at least one head"))
    }

    /// Parameter gradients in `param_names` order; `grad_logits` carries one
    /// entry per head.
    pub fn backward(&self, cache: &ModelCache<E>, grad_logits: &[Tensor<E>]) -> Result<Vec<Tensor<E>>> {
        if grad_logits.len() != self.head_count() {
            return Err(Error::Config(format!(
                "expected {} head gradients, got {}",
                self.head_count(),
                grad_logits.len()
            )));
        }
        match (self, cache) {
            (Model::Conventional(m), ModelCache::Conventional(c)) => m.backward(c, &grad_logits[0]),
            (Model::ThreeGrained(m), ModelCache::ThreeGrained(c)) => m.backward(
                c,
                &[grad_logits[0].clone(), grad_logits[1].clone(), grad_logits[2].clone()],
            ),
            _ => Err(Error::Config("cache does not belong to this architecture".into())),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            Model::Conventional(m) => m.param_names(),
            Model::ThreeGrained(m) => m.param_names(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor<E>> {
        match self {
            Model::Conventional(m) => m.params(),
            Model::ThreeGrained(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<E>> {
        match self {
            Model::Conventional(m) => m.params_mut(),
            Model::ThreeGrained(m) => m.params_mut(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> Model<T> {
        match self {
            Model::Conventional(m) => Model::Conventional(m.cast()),
            Model::ThreeGrained(m) => Model::ThreeGrained(m.cast()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn input_for(s: usize, rng: &mut Rng) -> ModelInput<f32> {
        ModelInput {
            face: Tensor::uniform(rng, &[s, s, 3], 0.0, 1.0).unwrap(),
            organs: (0..4)
                .map(|_| Tensor::uniform(rng, &[s / 4, s / 4, 3], 0.0, 1.0).unwrap())
                .collect(),
            regions: (0..3)
                .map(|_| Tensor::uniform(rng, &[s / 2, s / 2, 3], 0.0, 1.0).unwrap())
                .collect(),
        }
    }

    #[test]
    fn head_counts_per_architecture() {
        let mut rng = Rng::new(1);
        let conv = Model::<f32>::build(Architecture::Conventional, 5, 16, &mut rng).unwrap();
        let tg = Model::<f32>::build(Architecture::ThreeGrained, 5, 16, &mut rng).unwrap();
        assert_eq!(conv.head_count(), 1);
        assert_eq!(tg.head_count(), 3);
        let input = input_for(16, &mut rng);
        assert_eq!(conv.forward_eval(&input).unwrap().len(), 1);
        assert_eq!(tg.forward_eval(&input).unwrap().len(), 3);
    }

    #[test]
    fn decision_head_is_the_last_head() {
        let mut rng = Rng::new(2);
        let tg = Model::<f32>::build(Architecture::ThreeGrained, 5, 16, &mut rng).unwrap();
        let input = input_for(16, &mut rng);
        let heads = tg.forward_eval(&input).unwrap();
        let decision = tg.decision_probs(&input).unwrap();
        assert_eq!(decision, heads[2]);
    }

    #[test]
    fn architecture_names_round_trip() {
        for arch in [Architecture::Conventional, Architecture::ThreeGrained] {
            assert_eq!(Architecture::parse(arch.as_str()).unwrap(), arch);
        }
        assert!(Architecture::parse("resnet").is_err());
    }
}
