//! The multi-scale architecture: four organ branches, three local-region
//! branches, and a whole-face branch, fused by channel concatenation at
//! matching spatial extents. Three sigmoid heads supervise the organ
//! features, the organ+region fusion, and the full fusion; the face head is
//! the decision output.
//!
//! Channel plan for a face of size s (divisible by 8):
//!   organ inputs   4 x (s/4, s/4, 3) -> conv 16 each -> concat 64
//!                  -> dropout -> conv 32                = C_o  (s/4)
//!   region inputs  3 x (s/2, s/2, 3) -> conv 16 + pool -> (s/4, 16)
//!                  concat with C_o -> 80 -> dropout -> conv 32 + pool
//!                                                      = C_or (s/8)
//!   face input     (s, s, 3) -> [conv 16, 32, 64 each + pool] -> (s/8, 64)
//!                  concat with C_or -> 96 -> dropout -> flatten
//!                  -> dense 256 -> dense 256            = C_orf
//!   heads          flatten(C_o) -> n, flatten(C_or) -> n, C_orf -> n

use crate::error::{Error, Result};
use crate::layers::{
    concat_channels, maxpool_backward, maxpool_forward, split_channels, Activation, ConvCache,
    ConvLayer, DenseCache, DenseLayer, DropoutLayer, PoolCache,
};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::{sigmoid_probs, ModelInput};

pub const DROPOUT_RATE: f64 = 0.4;

#[derive(Debug, Clone)]
pub struct ThreeGrainedCnn<E: Scalar = f32> {
    input_size: usize,
    herb_count: usize,
    organ_convs: Vec<ConvLayer<E>>,
    organ_fuse: ConvLayer<E>,
    region_convs: Vec<ConvLayer<E>>,
    region_fuse: ConvLayer<E>,
    face_convs: Vec<ConvLayer<E>>,
    encoder1: DenseLayer<E>,
    encoder2: DenseLayer<E>,
    organ_head: DenseLayer<E>,
    region_head: DenseLayer<E>,
    face_head: DenseLayer<E>,
    dropout: DropoutLayer,
}

pub struct ThreeGrainedCache<E: Scalar = f32> {
    organ_convs: Vec<ConvCache<E>>,
    organ_drop_mask: Option<Tensor<E>>,
    organ_fuse: ConvCache<E>,
    region_convs: Vec<ConvCache<E>>,
    region_pools: Vec<PoolCache>,
    region_drop_mask: Option<Tensor<E>>,
    region_fuse: ConvCache<E>,
    region_fuse_pool: PoolCache,
    face_convs: Vec<ConvCache<E>>,
    face_pools: Vec<PoolCache>,
    face_drop_mask: Option<Tensor<E>>,
    encoder1: DenseCache<E>,
    encoder2: DenseCache<E>,
    organ_head: DenseCache<E>,
    region_head: DenseCache<E>,
    face_head: DenseCache<E>,
    organ_feature_shape: Vec<usize>,
    region_feature_shape: Vec<usize>,
    fused_shape: Vec<usize>,
}

impl<E: Scalar> ThreeGrainedCnn<E> {
    pub fn build(herb_count: usize, s: usize, rng: &mut Rng) -> Result<Self> {
        if s == 0 || s % 8 != 0 {
            return Err(Error::Config(format!(
                "input size must be a positive multiple of 8, got {s}"
            )));
        }
        if herb_count == 0 {
            return Err(Error::Config("herb count must be positive".into()));
        }
        let organ_s = s / 4;
        let fused_s = s / 8;
        // Each convolution owns its kernels; the four organ branches and
        // three region branches do not share parameters.
        let organ_convs = (0..4)
            .map(|_| ConvLayer::new(3, 3, 3, 16, rng))
            .collect::<Result<Vec<_>>>()?;
        let organ_fuse = ConvLayer::new(3, 3, 64, 32, rng)?;
        let region_convs = (0..3)
            .map(|_| ConvLayer::new(3, 3, 3, 16, rng))
            .collect::<Result<Vec<_>>>()?;
        let region_fuse = ConvLayer::new(3, 3, 80, 32, rng)?;
        let face_convs = vec![
            ConvLayer::new(3, 3, 3, 16, rng)?,
            ConvLayer::new(3, 3, 16, 32, rng)?,
            ConvLayer::new(3, 3, 32, 64, rng)?,
        ];
        let encoder1 = DenseLayer::new(fused_s * fused_s * 96, 256, rng)?;
        let encoder2 = DenseLayer::new(256, 256, rng)?;
        let organ_head = DenseLayer::new(organ_s * organ_s * 32, herb_count, rng)?;
        let region_head = DenseLayer::new(fused_s * fused_s * 32, herb_count, rng)?;
        let face_head = DenseLayer::new(256, herb_count, rng)?;
        Ok(ThreeGrainedCnn {
            input_size: s,
            herb_count,
            organ_convs,
            organ_fuse,
            region_convs,
            region_fuse,
            face_convs,
            encoder1,
            encoder2,
            organ_head,
            region_head,
            face_head,
            dropout: DropoutLayer::new(DROPOUT_RATE).expect("rate constant is valid"),
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn herb_count(&self) -> usize {
        self.herb_count
    }

    fn check_input(&self, input: &ModelInput<E>) -> Result<()> {
        let s = self.input_size;
        if input.face.shape() != [s, s, 3] {
            return Err(Error::ShapeMismatch {
                expected: vec![s, s, 3],
                actual: input.face.shape().to_vec(),
                context: "face branch input".into(),
            });
        }
        if input.organs.len() != 4 {
            return Err(Error::Config(format!(
                "organ branch expects 4 crops, got {}",
                input.organs.len()
            )));
        }
        if input.regions.len() != 3 {
            return Err(Error::Config(format!(
                "region branch expects 3 crops, got {}",
                input.regions.len()
            )));
        }
        for organ in &input.organs {
            if organ.shape() != [s / 4, s / 4, 3] {
                return Err(Error::ShapeMismatch {
                    expected: vec![s / 4, s / 4, 3],
                    actual: organ.shape().to_vec(),
                    context: "organ branch input".into(),
                });
            }
        }
        for region in &input.regions {
            if region.shape() != [s / 2, s / 2, 3] {
                return Err(Error::ShapeMismatch {
                    expected: vec![s / 2, s / 2, 3],
                    actual: region.shape().to_vec(),
                    context: "region branch input".into(),
                });
            }
        }
        Ok(())
    }

    /// Forward pass. In train mode (`rng` present) the three concatenations
    /// are dropped out, consuming the rng in organ, region, face order; in
    /// eval mode dropout is the identity. Returns
    /// [P_organ, P_region, P_face]; the face head is the decision output.
    pub fn forward(
        &self,
        input: &ModelInput<E>,
        mut rng: Option<&mut Rng>,
    ) -> Result<(Vec<Tensor<E>>, ThreeGrainedCache<E>)> {
        self.check_input(input)?;

        let dropout = |x: Tensor<E>, rng: &mut Option<&mut Rng>| match rng {
            Some(r) => {
                let (out, mask) = self.dropout.forward_train(&x, r);
                (out, Some(mask))
            }
            None => (x, None),
        };

        // Organ branch.
        let mut organ_outs = Vec::with_capacity(4);
        let mut organ_caches = Vec::with_capacity(4);
        for (conv, crop) in self.organ_convs.iter().zip(&input.organs) {
            let (out, cache) = conv.forward(crop, Activation::Relu)?;
            organ_outs.push(out);
            organ_caches.push(cache);
        }
        let organ_cat = concat_channels(&organ_outs.iter().collect::<Vec<_>>())?;
        let (organ_cat, organ_drop_mask) = dropout(organ_cat, &mut rng);
        let (organ_feat, organ_fuse_cache) = self.organ_fuse.forward(&organ_cat, Activation::Relu)?;

        // Region branch, pooled down to the organ extent before fusion.
        let mut region_outs = Vec::with_capacity(3);
        let mut region_caches = Vec::with_capacity(3);
        let mut region_pools = Vec::with_capacity(3);
        for (conv, crop) in self.region_convs.iter().zip(&input.regions) {
            let (out, cache) = conv.forward(crop, Activation::Relu)?;
            let (pooled, pool) = maxpool_forward(&out)?;
            region_outs.push(pooled);
            region_caches.push(cache);
            region_pools.push(pool);
        }
        let mut region_inputs: Vec<&Tensor<E>> = vec![&organ_feat];
        region_inputs.extend(region_outs.iter());
        let region_cat = concat_channels(&region_inputs)?;
        let (region_cat, region_drop_mask) = dropout(region_cat, &mut rng);
        let (region_conv_out, region_fuse_cache) =
            self.region_fuse.forward(&region_cat, Activation::Relu)?;
        let (region_feat, region_fuse_pool) = maxpool_forward(&region_conv_out)?;

        // Face branch: three conv+pool stages down to the fused extent.
        let mut face_caches = Vec::with_capacity(3);
        let mut face_pools = Vec::with_capacity(3);
        let mut face_feat = input.face.clone();
        for conv in &self.face_convs {
            let (out, cache) = conv.forward(&face_feat, Activation::Relu)?;
            let (pooled, pool) = maxpool_forward(&out)?;
            face_caches.push(cache);
            face_pools.push(pool);
            face_feat = pooled;
        }

        let fused_cat = concat_channels(&[&region_feat, &face_feat])?;
        let (fused_cat, face_drop_mask) = dropout(fused_cat, &mut rng);
        let fused_shape = fused_cat.shape().to_vec();
        let (enc1, encoder1_cache) = self.encoder1.forward(&fused_cat.flatten(), Activation::Relu)?;
        let (enc2, encoder2_cache) = self.encoder2.forward(&enc1, Activation::Relu)?;

        // Heads.
        let (organ_logits, organ_head_cache) =
            self.organ_head.forward(&organ_feat.flatten(), Activation::None)?;
        let (region_logits, region_head_cache) =
            self.region_head.forward(&region_feat.flatten(), Activation::None)?;
        let (face_logits, face_head_cache) = self.face_head.forward(&enc2, Activation::None)?;

        let heads = vec![
            sigmoid_probs(&organ_logits),
            sigmoid_probs(&region_logits),
            sigmoid_probs(&face_logits),
        ];
        let cache = ThreeGrainedCache {
            organ_convs: organ_caches,
            organ_drop_mask,
            organ_fuse: organ_fuse_cache,
            region_convs: region_caches,
            region_pools,
            region_drop_mask,
            region_fuse: region_fuse_cache,
            region_fuse_pool,
            face_convs: face_caches,
            face_pools,
            face_drop_mask,
            encoder1: encoder1_cache,
            encoder2: encoder2_cache,
            organ_head: organ_head_cache,
            region_head: region_head_cache,
            face_head: face_head_cache,
            organ_feature_shape: organ_feat.shape().to_vec(),
            region_feature_shape: region_feat.shape().to_vec(),
            fused_shape,
        };
        Ok((heads, cache))
    }

    /// Eval-mode probabilities for all three heads.
    pub fn predict(&self, input: &ModelInput<E>) -> Result<Vec<Tensor<E>>> {
        Ok(self.forward(input, None)?.0)
    }

    /// Gradients for every parameter in `param_names` order, given the loss
    /// gradients with respect to the three heads' logits. Fan-out points
    /// (the organ and organ+region features each feed a head and the next
    /// fusion) accumulate both incoming gradients.
    pub fn backward(
        &self,
        cache: &ThreeGrainedCache<E>,
        grad_logits: &[Tensor<E>; 3],
    ) -> Result<Vec<Tensor<E>>> {
        let [organ_logit_grad, region_logit_grad, face_logit_grad] = grad_logits;

        // Face head -> encoders -> fused concat.
        let (d_enc2, face_head_grads) = self.face_head.backward(face_logit_grad, &cache.face_head)?;
        let (d_enc1, encoder2_grads) = self.encoder2.backward(&d_enc2, &cache.encoder2)?;
        let (d_fused_flat, encoder1_grads) = self.encoder1.backward(&d_enc1, &cache.encoder1)?;
        let mut d_fused = d_fused_flat.reshape(&cache.fused_shape)?;
        if let Some(mask) = &cache.face_drop_mask {
            d_fused = DropoutLayer::backward(&d_fused, mask)?;
        }
        let parts = split_channels(&d_fused, &[32, 64])?;
        let (d_region_from_fused, d_face_feat) = (parts[0].clone(), parts[1].clone());

        // Face branch stack, last stage first; the first convolution reads
        // the raw face, so its input gradient is never needed.
        let mut d_face = d_face_feat;
        let mut face_conv_grads = Vec::with_capacity(3);
        for (idx, (conv, (conv_cache, pool_cache))) in self
            .face_convs
            .iter()
            .zip(cache.face_convs.iter().zip(&cache.face_pools))
            .enumerate()
            .rev()
        {
            let d_conv_out = maxpool_backward(&d_face, pool_cache)?;
            if idx == 0 {
                face_conv_grads.push(conv.backward_params(&d_conv_out, conv_cache)?);
            } else {
                let (d_in, grads) = conv.backward(&d_conv_out, conv_cache)?;
                face_conv_grads.push(grads);
                d_face = d_in;
            }
        }
        face_conv_grads.reverse();

        // Region head joins the fused-path gradient at C_or.
        let (d_region_flat, region_head_grads) =
            self.region_head.backward(region_logit_grad, &cache.region_head)?;
        let mut d_region_feat = d_region_flat.reshape(&cache.region_feature_shape)?;
        d_region_feat.add_assign(&d_region_from_fused)?;

        let d_region_conv_out = maxpool_backward(&d_region_feat, &cache.region_fuse_pool)?;
        let (d_region_cat, region_fuse_grads) =
            self.region_fuse.backward(&d_region_conv_out, &cache.region_fuse)?;
        let d_region_cat = match &cache.region_drop_mask {
            Some(mask) => DropoutLayer::backward(&d_region_cat, mask)?,
            None => d_region_cat,
        };
        let parts = split_channels(&d_region_cat, &[32, 16, 16, 16])?;
        let d_organ_from_region = parts[0].clone();

        let mut region_conv_grads = Vec::with_capacity(3);
        for (i, (conv, conv_cache)) in
            self.region_convs.iter().zip(&cache.region_convs).enumerate()
        {
            let d_pooled = &parts[i + 1];
            let d_conv_out = maxpool_backward(d_pooled, &cache.region_pools[i])?;
            region_conv_grads.push(conv.backward_params(&d_conv_out, conv_cache)?);
        }

        // Organ head joins the region-path gradient at C_o.
        let (d_organ_flat, organ_head_grads) =
            self.organ_head.backward(organ_logit_grad, &cache.organ_head)?;
        let mut d_organ_feat = d_organ_flat.reshape(&cache.organ_feature_shape)?;
        d_organ_feat.add_assign(&d_organ_from_region)?;

        let (d_organ_cat, organ_fuse_grads) =
            self.organ_fuse.backward(&d_organ_feat, &cache.organ_fuse)?;
        let d_organ_cat = match &cache.organ_drop_mask {
            Some(mask) => DropoutLayer::backward(&d_organ_cat, mask)?,
            None => d_organ_cat,
        };
        let parts = split_channels(&d_organ_cat, &[16, 16, 16, 16])?;
        let mut organ_conv_grads = Vec::with_capacity(4);
        for (i, (conv, conv_cache)) in self.organ_convs.iter().zip(&cache.organ_convs).enumerate()
        {
            organ_conv_grads.push(conv.backward_params(&parts[i], conv_cache)?);
        }

        let mut out = Vec::with_capacity(34);
        for g in organ_conv_grads {
            out.push(g.kernels);
            out.push(g.bias);
        }
        out.push(organ_fuse_grads.kernels);
        out.push(organ_fuse_grads.bias);
        for g in region_conv_grads {
            out.push(g.kernels);
            out.push(g.bias);
        }
        out.push(region_fuse_grads.kernels);
        out.push(region_fuse_grads.bias);
        for g in face_conv_grads {
            out.push(g.kernels);
            out.push(g.bias);
        }
        out.push(encoder1_grads.weights);
        out.push(encoder1_grads.bias);
        out.push(encoder2_grads.weights);
        out.push(encoder2_grads.bias);
        out.push(organ_head_grads.weights);
        out.push(organ_head_grads.bias);
        out.push(region_head_grads.weights);
        out.push(region_head_grads.bias);
        out.push(face_head_grads.weights);
        out.push(face_head_grads.bias);
        Ok(out)
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(34);
        for i in 1..=4 {
            names.push(format!("organ{i}.kernels"));
            names.push(format!("organ{i}.bias"));
        }
        names.push("organ_fuse.kernels".into());
        names.push("organ_fuse.bias".into());
        for i in 1..=3 {
            names.push(format!("region{i}.kernels"));
            names.push(format!("region{i}.bias"));
        }
        names.push("region_fuse.kernels".into());
        names.push("region_fuse.bias".into());
        for i in 1..=3 {
            names.push(format!("face{i}.kernels"));
            names.push(format!("face{i}.bias"));
        }
        for name in [
            "encoder1.weights",
            "encoder1.bias",
            "encoder2.weights",
            "encoder2.bias",
            "organ_head.weights",
            "organ_head.bias",
            "region_head.weights",
            "region_head.bias",
            "face_head.weights",
            "face_head.bias",
        ] {
            names.push(name.into());
        }
        names
    }

    pub fn params(&self) -> Vec<&Tensor<E>> {
        let mut out: Vec<&Tensor<E>> = Vec::with_capacity(34);
        for conv in &self.organ_convs {
            out.push(&conv.kernels);
            out.push(&conv.bias);
        }
        out.push(&self.organ_fuse.kernels);
        out.push(&self.organ_fuse.bias);
        for conv in &self.region_convs {
            out.push(&conv.kernels);
            out.push(&conv.bias);
        }
        out.push(&self.region_fuse.kernels);
        out.push(&self.region_fuse.bias);
        for conv in &self.face_convs {
            out.push(&conv.kernels);
            out.push(&conv.bias);
        }
        out.push(&self.encoder1.weights);
        out.push(&self.encoder1.bias);
        out.push(&self.encoder2.weights);
        out.push(&self.encoder2.bias);
        out.push(&self.organ_head.weights);
        out.push(&self.organ_head.bias);
        out.push(&self.region_head.weights);
        out.push(&self.region_head.bias);
        out.push(&self.face_head.weights);
        out.push(&self.face_head.bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<E>> {
        let mut out: Vec<&mut Tensor<E>> = Vec::with_capacity(34);
        for conv in &mut self.organ_convs {
            out.push(&mut conv.kernels);
            out.push(&mut conv.bias);
        }
        out.push(&mut self.organ_fuse.kernels);
        out.push(&mut self.organ_fuse.bias);
        for conv in &mut self.region_convs {
            out.push(&mut conv.kernels);
            out.push(&mut conv.bias);
        }
        out.push(&mut self.region_fuse.kernels);
        out.push(&mut self.region_fuse.bias);
        for conv in &mut self.face_convs {
            out.push(&mut conv.kernels);
            out.push(&mut conv.bias);
        }
        out.push(&mut self.encoder1.weights);
        out.push(&mut self.encoder1.bias);
        out.push(&mut self.encoder2.weights);
        out.push(&mut self.encoder2.bias);
        out.push(&mut self.organ_head.weights);
        out.push(&mut self.organ_head.bias);
        out.push(&mut self.region_head.weights);
        out.push(&mut self.region_head.bias);
        out.push(&mut self.face_head.weights);
        out.push(&mut self.face_head.bias);
        out
    }

    pub fn cast<T: Scalar>(&self) -> ThreeGrainedCnn<T> {
        let cast_conv = |c: &ConvLayer<E>| ConvLayer::<T> {
            kernels: c.kernels.cast(),
            bias: c.bias.cast(),
        };
        let cast_dense = |d: &DenseLayer<E>| DenseLayer::<T> {
            weights: d.weights.cast(),
            bias: d.bias.cast(),
        };
        ThreeGrainedCnn {
            input_size: self.input_size,
            herb_count: self.herb_count,
            organ_convs: self.organ_convs.iter().map(cast_conv).collect(),
            organ_fuse: cast_conv(&self.organ_fuse),
            region_convs: self.region_convs.iter().map(cast_conv).collect(),
            region_fuse: cast_conv(&self.region_fuse),
            face_convs: self.face_convs.iter().map(cast_conv).collect(),
            encoder1: cast_dense(&self.encoder1),
            encoder2: cast_dense(&self.encoder2),
            organ_head: cast_dense(&self.organ_head),
            region_head: cast_dense(&self.region_head),
            face_head: cast_dense(&self.face_head),
            dropout: self.dropout,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_input(s: usize) -> ModelInput<f32> {
        ModelInput {
            face: Tensor::zeros(&[s, s, 3]).unwrap(),
            organs: (0..4).map(|_| Tensor::zeros(&[s / 4, s / 4, 3]).unwrap()).collect(),
            regions: (0..3).map(|_| Tensor::zeros(&[s / 2, s / 2, 3]).unwrap()).collect(),
        }
    }

    fn random_input(s: usize, rng: &mut Rng) -> ModelInput<f32> {
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
    fn paper_scale_crop_sizes() {
        let mut rng = Rng::new(1);
        let model = ThreeGrainedCnn::<f32>::build(5, 224, &mut rng).unwrap();
        let input = zero_input(224);
        assert_eq!(input.organs[0].shape(), &[56, 56, 3]);
        assert_eq!(input.regions[0].shape(), &[112, 112, 3]);
        let heads = model.predict(&input).unwrap();
        assert_eq!(heads.len(), 3);
        assert!(heads.iter().all(|h| h.shape() == [5]));
    }

    #[test]
    fn fusion_channel_counts_are_64_80_96() {
        // The concat widths are fixed by the channel plan; probe them via
        // the parameter shapes of the convolutions consuming each concat.
        let model = ThreeGrainedCnn::<f32>::build(5, 16, &mut Rng::new(2)).unwrap();
        assert_eq!(model.organ_fuse.kernels.shape(), &[3, 3, 64, 32]);
        assert_eq!(model.region_fuse.kernels.shape(), &[3, 3, 80, 32]);
        assert_eq!(model.encoder1.weights.shape()[0], (16 / 8) * (16 / 8) * 96);
    }

    #[test]
    fn zero_input_with_zero_biases_gives_half_probabilities() {
        let model = ThreeGrainedCnn::<f32>::build(6, 16, &mut Rng::new(3)).unwrap();
        let heads = model.predict(&zero_input(16)).unwrap();
        for head in heads {
            assert!(head.data().iter().all(|&p| p == 0.5));
        }
    }

    #[test]
    fn train_mode_reproduces_with_same_seed() {
        let mut rng = Rng::new(4);
        let model = ThreeGrainedCnn::<f32>::build(5, 16, &mut rng).unwrap();
        let input = random_input(16, &mut rng);
        let (a, _) = model.forward(&input, Some(&mut Rng::new(9))).unwrap();
        let (b, _) = model.forward(&input, Some(&mut Rng::new(9))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probabilities_strictly_inside_unit_interval() {
        let mut rng = Rng::new(5);
        let model = ThreeGrainedCnn::<f32>::build(8, 16, &mut rng).unwrap();
        let input = random_input(16, &mut rng);
        for head in model.predict(&input).unwrap() {
            assert!(head.data().iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }

    #[test]
    fn organ_convolutions_have_distinct_parameters() {
        let model = ThreeGrainedCnn::<f32>::build(5, 16, &mut Rng::new(6)).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(
                    model.organ_convs[i].kernels, model.organ_convs[j].kernels,
                    "organ convs {i} and {j} share initial kernels"
                );
            }
        }
    }

    #[test]
    fn backward_covers_every_parameter() {
        let mut rng = Rng::new(7);
        let model = ThreeGrainedCnn::<f32>::build(4, 16, &mut rng).unwrap();
        let input = random_input(16, &mut rng);
        let (heads, cache) = model.forward(&input, Some(&mut Rng::new(1))).unwrap();
        let grads = model
            .backward(
                &cache,
                &[
                    Tensor::ones(heads[0].shape()).unwrap(),
                    Tensor::ones(heads[1].shape()).unwrap(),
                    Tensor::ones(heads[2].shape()).unwrap(),
                ],
            )
            .unwrap();
        let params = model.params();
        let names = model.param_names();
        assert_eq!(grads.len(), params.len());
        assert_eq!(grads.len(), names.len());
        assert_eq!(grads.len(), 34);
        for ((g, p), name) in grads.iter().zip(&params).zip(&names) {
            assert_eq!(g.shape(), p.shape(), "shape mismatch for {name}");
        }
    }

    #[test]
    fn wrong_organ_size_names_the_branch() {
        let model = ThreeGrainedCnn::<f32>::build(5, 16, &mut Rng::new(8)).unwrap();
        let mut input = zero_input(16);
        input.organs[2] = Tensor::zeros(&[5, 5, 3]).unwrap();
        let err = model.predict(&input).unwrap_err();
        assert!(err.to_string().contains("organ branch"), "{err}");
    }
}
