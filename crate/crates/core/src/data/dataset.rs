//! In-memory datasets and their on-disk layout.
//!
//! A dataset root contains:
//!   dictionary.txt   one herb name per line; line number = herb index
//!   labels.tsv       one "sampleId<TAB>i,j,k" record per sample
//!   manifest.tsv     image_size / herb_count / checksum headers, then one
//!                    "sample<TAB>id" line per sample in canonical order
//!   images/<id>.png  8-bit RGB faces, resized to image_size on load

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::ModelInput;
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::util::Fnv1a;

use super::augment::{augment, AugmentParams};
use super::dictionary::{HerbDictionary, Prescription};
use super::geometry::{segment_face, CropGeometry};
use super::image::{resize_bilinear, RgbImage};

/// One labelled face. `source` is the index of the original sample for
/// augmented copies, `None` for originals.
#[derive(Debug, Clone)]
pub struct FaceSample {
    pub id: String,
    pub face: Tensor<f32>,
    pub label: Prescription,
    pub source: Option<usize>,
}

impl FaceSample {
    /// Derive the seven crops and package the tensors for a model.
    pub fn to_model_input(&self, geometry: &CropGeometry) -> Result<ModelInput<f32>> {
        let crops = segment_face(&self.face, geometry)?;
        Ok(ModelInput { face: self.face.clone(), organs: crops.organs, regions: crops.regions })
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub dictionary: HerbDictionary,
    pub image_size: usize,
    pub samples: Vec<FaceSample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn herb_count(&self) -> usize {
        self.dictionary.len()
    }

    /// Grow the dataset to `round(factor * len)` samples by adding
    /// augmented copies. Originals are retained verbatim; copies cycle over
    /// the originals, carry their source's label, and record the source
    /// index. Each copy draws from its own rng stream, so the result is
    /// independent of the iteration order.
    pub fn expand(&self, factor: f64, params: &AugmentParams, rng: &Rng) -> Result<Dataset> {
        if factor < 1.0 {
            return Err(Error::Config(format!("expansion factor must be >= 1, got {factor}")));
        }
        params.validate()?;
        let target = expansion_target(self.len(), factor);
        let mut samples = self.samples.clone();
        samples.reserve(target.saturating_sub(self.len()));
        let mut copy_counter: HashMap<usize, usize> = HashMap::new();
        for k in 0..target.saturating_sub(self.len()) {
            let source = k % self.len();
            let mut sample_rng = rng.derive((self.len() + k) as u64);
            let face = augment(&self.samples[source].face, params, &mut sample_rng)?;
            let copy_index = copy_counter.entry(source).or_insert(0);
            *copy_index += 1;
            samples.push(FaceSample {
                id: format!("{}_aug{}", self.samples[source].id, copy_index),
                face,
                label: self.samples[source].label.clone(),
                source: Some(source),
            });
        }
        Ok(Dataset {
            dictionary: self.dictionary.clone(),
            image_size: self.image_size,
            samples,
        })
    }

    fn checksum(&self) -> u64 {
        let mut hash = Fnv1a::new();
        hash.update(&(self.image_size as u64).to_le_bytes());
        hash.update(&(self.herb_count() as u64).to_le_bytes());
        for name in self.dictionary.names() {
            hash.update(name.as_bytes());
            hash.update(b"\n");
        }
        for sample in &self.samples {
            hash.update(sample.id.as_bytes());
            hash.update(b"\t");
            for index in sample.label.indices() {
                hash.update(&(index as u64).to_le_bytes());
            }
        }
        hash.finish()
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        fs::create_dir_all(root)?;
        fs::create_dir_all(root.join("images"))?;
        self.dictionary.save(&root.join("dictionary.txt"))?;

        let mut labels = String::new();
        for sample in &self.samples {
            let indices: Vec<String> =
                sample.label.indices().iter().map(|i| i.to_string()).collect();
            labels.push_str(&format!("{}\t{}\n", sample.id, indices.join(",")));
        }
        fs::write(root.join("labels.tsv"), labels)?;

        let mut manifest = String::new();
        manifest.push_str(&format!("image_size\t{}\n", self.image_size));
        manifest.push_str(&format!("herb_count\t{}\n", self.herb_count()));
        manifest.push_str(&format!("checksum\t{:016x}\n", self.checksum()));
        for sample in &self.samples {
            manifest.push_str(&format!("sample\t{}\n", sample.id));
        }
        fs::write(root.join("manifest.tsv"), manifest)?;

        for sample in &self.samples {
            let image = RgbImage::from_tensor(&sample.face)?;
            image.save(&root.join("images").join(format!("{}.png", sample.id)))?;
        }
        Ok(())
    }

    pub fn load(root: &Path) -> Result<Dataset> {
        let manifest_path = root.join("manifest.tsv");
        let manifest = fs::read_to_string(&manifest_path).map_err(|e| {
            Error::Data(format!("missing manifest {}: {e}", manifest_path.display()))
        })?;
        let mut image_size = None;
        let mut herb_count = None;
        let mut checksum = None;
        let mut ids = Vec::new();
        for (lineno, line) in manifest.lines().enumerate() {
            let Some((key, value)) = line.split_once('\t') else {
                return Err(Error::Data(format!(
                    "manifest line {} is not key<TAB>value: {line:?}",
                    lineno + 1
                )));
            };
            match key {
                "image_size" => image_size = Some(parse_usize(value, "image_size")?),
                "herb_count" => herb_count = Some(parse_usize(value, "herb_count")?),
                "checksum" => {
                    checksum = Some(u64::from_str_radix(value, 16).map_err(|_| {
                        Error::Data(format!("manifest checksum {value:?} is not hex"))
                    })?)
                }
                "sample" => ids.push(value.to_string()),
                other => {
                    return Err(Error::Data(format!("unknown manifest key {other:?}")));
                }
            }
        }
        let image_size =
            image_size.ok_or_else(|| Error::Data("manifest is missing image_size".into()))?;
        let herb_count =
            herb_count.ok_or_else(|| Error::Data("manifest is missing herb_count".into()))?;

        let dictionary = HerbDictionary::load(&root.join("dictionary.txt"))?;
        if dictionary.len() != herb_count {
            return Err(Error::Data(format!(
                "manifest says {herb_count} herbs, dictionary has {}",
                dictionary.len()
            )));
        }

        let labels_path = root.join("labels.tsv");
        let labels_text = fs::read_to_string(&labels_path).map_err(|e| {
            Error::Data(format!("missing labels file {}: {e}", labels_path.display()))
        })?;
        let mut labels: HashMap<String, Prescription> = HashMap::new();
        for (lineno, line) in labels_text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let Some((id, spec)) = line.split_once('\t') else {
                return Err(Error::Data(format!(
                    "labels line {} is not id<TAB>indices: {line:?}",
                    lineno + 1
                )));
            };
            let indices = spec
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| parse_usize(s, "label index"))
                .collect::<Result<Vec<_>>>()?;
            let prescription = Prescription::from_indices(herb_count, &indices)?;
            if prescription.active_count() == 0 {
                return Err(Error::Data(format!("sample {id:?} has an empty prescription")));
            }
            if labels.insert(id.to_string(), prescription).is_some() {
                return Err(Error::Data(format!("duplicate sample id {id:?} in labels")));
            }
        }

        let mut seen = HashMap::new();
        let mut samples = Vec::with_capacity(ids.len());
        for (position, id) in ids.iter().enumerate() {
            if seen.insert(id.clone(), position).is_some() {
                return Err(Error::Data(format!("duplicate sample id {id:?} in manifest")));
            }
            let label = labels
                .get(id)
                .cloned()
                .ok_or_else(|| Error::Data(format!("sample {id:?} has no label record")))?;
            let image_path = root.join("images").join(format!("{id}.png"));
            let image = RgbImage::load(&image_path)?;
            let mut face = image.to_tensor();
            if face.shape()[0] != image_size || face.shape()[1] != image_size {
                face = resize_bilinear(&face, image_size, image_size)?;
            }
            samples.push(FaceSample { id: id.clone(), face, label, source: None });
        }

        let dataset = Dataset { dictionary, image_size, samples };
        if let Some(expected) = checksum {
            let actual = dataset.checksum();
            if actual != expected {
                return Err(Error::Data(format!(
                    "manifest checksum {expected:016x} does not match content {actual:016x}"
                )));
            }
        }
        Ok(dataset)
    }
}

/// Number of samples after expanding `len` originals by `factor`.
pub fn expansion_target(len: usize, factor: f64) -> usize {
    (factor * len as f64).round() as usize
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Data(format!("{what} {s:?} is not a non-negative integer")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset(count: usize, n: usize, s: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let dictionary = HerbDictionary::synthetic(n).unwrap();
        let samples = (0..count)
            .map(|i| {
                let face = Tensor::uniform(&mut rng, &[s, s, 3], 0.0, 1.0).unwrap();
                let first = i % n;
                let second = (i + 1) % n;
                FaceSample {
                    id: format!("sample{i:03}"),
                    face,
                    label: Prescription::from_indices(n, &[first, second]).unwrap(),
                    source: None,
                }
            })
            .collect();
        Dataset { dictionary, image_size: s, samples }
    }

    fn temp_root(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("facerx-dataset-tests").join(name);
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn expansion_target_matches_reported_ratio() {
        // 9653 originals at the augmentation study's ratio grow to 18463.
        let factor = 18463.0 / 9653.0;
        assert_eq!(expansion_target(9653, factor), 18463);
        assert_eq!(expansion_target(10, 1.0), 10);
    }

    #[test]
    fn expand_retains_originals_and_labels() {
        let data = tiny_dataset(6, 4, 16, 1);
        let expanded = data.expand(2.5, &AugmentParams::default(), &Rng::new(3)).unwrap();
        assert_eq!(expanded.len(), 15);
        for (a, b) in data.samples.iter().zip(&expanded.samples) {
            assert_eq!(a.face, b.face);
            assert_eq!(a.id, b.id);
        }
        for copy in &expanded.samples[6..] {
            let source = copy.source.expect("augmented copies record their source");
            assert_eq!(copy.label, data.samples[source].label);
        }
    }

    #[test]
    fn expand_factor_one_is_identity() {
        let data = tiny_dataset(5, 3, 16, 2);
        let expanded = data.expand(1.0, &AugmentParams::default(), &Rng::new(1)).unwrap();
        assert_eq!(expanded.len(), 5);
        assert!(data.expand(0.5, &AugmentParams::default(), &Rng::new(1)).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let root = temp_root("roundtrip");
        let data = tiny_dataset(4, 5, 16, 3);
        data.save(&root).unwrap();
        let loaded = Dataset::load(&root).unwrap();
        assert_eq!(loaded.len(), 4);
        assert_eq!(loaded.image_size, 16);
        assert_eq!(loaded.dictionary, data.dictionary);
        for (a, b) in data.samples.iter().zip(&loaded.samples) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label, b.label);
        }
        // Second save reproduces identical bytes: quantization happened once.
        let root2 = temp_root("roundtrip2");
        loaded.save(&root2).unwrap();
        for name in ["dictionary.txt", "labels.tsv", "manifest.tsv"] {
            assert_eq!(fs::read(root.join(name)).unwrap(), fs::read(root2.join(name)).unwrap());
        }
        let img = |r: &Path| fs::read(r.join("images/sample000.png")).unwrap();
        assert_eq!(img(&root), img(&root2));
    }

    #[test]
    fn out_of_range_label_is_an_error() {
        let root = temp_root("bad-label");
        tiny_dataset(2, 3, 16, 4).save(&root).unwrap();
        fs::write(root.join("labels.tsv"), "sample000\t0,7\nsample001\t1\n").unwrap();
        let err = Dataset::load(&root).unwrap_err();
        assert!(err.to_string().contains("index 7"), "{err}");
    }

    #[test]
    fn duplicate_sample_id_is_an_error() {
        let root = temp_root("dup-id");
        tiny_dataset(2, 3, 16, 5).save(&root).unwrap();
        let manifest = fs::read_to_string(root.join("manifest.tsv")).unwrap();
        let dup = manifest.replace("sample\tsample000\n", "sample\tsample000\nsample\tsample000\n");
        assert_ne!(manifest, dup);
        fs::write(root.join("manifest.tsv"), dup).unwrap();
        let err = Dataset::load(&root).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn missing_image_is_an_error() {
        let root = temp_root("missing-image");
        tiny_dataset(2, 3, 16, 6).save(&root).unwrap();
        fs::remove_file(root.join("images/sample001.png")).unwrap();
        let err = Dataset::load(&root).unwrap_err();
        assert!(err.to_string().contains("sample001"), "{err}");
    }

    #[test]
    fn empty_manifest_is_an_empty_dataset() {
        let root = temp_root("empty");
        let data = tiny_dataset(2, 3, 16, 7);
        data.save(&root).unwrap();
        let empty = Dataset { dictionary: data.dictionary.clone(), image_size: 16, samples: vec![] };
        empty.save(&root).unwrap();
        let loaded = Dataset::load(&root).unwrap();
        assert_eq!(loaded.len(), 0);
    }

    #[test]
    fn checksum_detects_label_tampering() {
        let root = temp_root("tamper");
        tiny_dataset(3, 4, 16, 8).save(&root).unwrap();
        let labels = fs::read_to_string(root.join("labels.tsv")).unwrap();
        let tampered = labels.replacen("\t0,1", "\t0,2", 1);
        assert_ne!(labels, tampered);
        fs::write(root.join("labels.tsv"), tampered).unwrap();
        let err = Dataset::load(&root).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }
}
