//! Herb dictionary and multi-hot prescription encoding.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Ordered list of unique herb names; line number in the dictionary file is
/// the herb index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HerbDictionary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl HerbDictionary {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Data("dictionary has no herbs".into()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Data(format!("herb {i} has an empty name")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate herb name {name:?}")));
            }
        }
        Ok(HerbDictionary { names, index })
    }

    /// Placeholder names for synthetic data: herb_000, herb_001, ...
    pub fn synthetic(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("herb_{i:03}")).collect())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(|s| s.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for name in &self.names {
            out.push_str(name);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Data(format!("missing dictionary file {}: {e}", path.display()))
        })?;
        Self::new(text.lines().map(|l| l.to_string()).collect())
    }
}

/// A prescription as a multi-hot vector over the dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prescription {
    bits: Vec<u8>,
}

impl Prescription {
    pub fn empty(n: usize) -> Self {
        Prescription { bits: vec![0; n] }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![0u8; n];
        for &i in indices {
            if i >= n {
                return Err(Error::Data(format!(
                    "label references herb index {i} but the dictionary has {n} entries"
                )));
            }
            bits[i] = 1;
        }
        Ok(Prescription { bits })
    }

    pub fn from_herb_names(dict: &HerbDictionary, names: &[&str]) -> Result<Self> {
        let mut bits = vec![0u8; dict.len()];
        for name in names {
            match dict.index_of(name) {
                Some(i) => bits[i] = 1,
                None => {
                    return Err(Error::Data(format!("unknown herb name {name:?}")));
                }
            }
        }
        Ok(Prescription { bits })
    }

    pub fn herb_count(&self) -> usize {
        self.bits.len()
    }

    pub fn is_set(&self, index: usize) -> bool {
        self.bits.get(index).copied() == Some(1)
    }

    pub fn set(&mut self, index: usize) {
        self.bits[index] = 1;
    }

    /// Number of prescribed herbs (the prescription length).
    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == 1).then_some(i))
            .collect()
    }

    pub fn herb_names<'d>(&self, dict: &'d HerbDictionary) -> Result<Vec<&'d str>> {
        if dict.len() != self.bits.len() {
            return Err(Error::Data(format!(
                "prescription over {} herbs does not match dictionary of {}",
                self.bits.len(),
                dict.len()
            )));
        }
        Ok(self.indices().into_iter().map(|i| dict.name(i).unwrap()).collect())
    }

    /// The 0/1 target vector the loss consumes.
    pub fn to_tensor<E: Scalar>(&self) -> Tensor<E> {
        Tensor::from_vec(
            &[self.bits.len()],
            self.bits.iter().map(|&b| if b == 1 { E::ONE } else { E::ZERO }).collect(),
        )
        .expect("length matches shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_rejects_duplicates() {
        let err = HerbDictionary::new(vec!["a".into(), "b".into(), "a".into()]).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn name_index_bijection() {
        let dict = HerbDictionary::synthetic(5).unwrap();
        for i in 0..5 {
            let name = dict.name(i).unwrap();
            assert_eq!(dict.index_of(name), Some(i));
        }
        assert_eq!(dict.name(5), None);
        assert_eq!(dict.index_of("nope"), None);
    }

    #[test]
    fn prescription_round_trips_through_names() {
        let dict = HerbDictionary::synthetic(6).unwrap();
        let p = Prescription::from_indices(6, &[0, 3, 5]).unwrap();
        let names = p.herb_names(&dict).unwrap();
        let back = Prescription::from_herb_names(&dict, &names).unwrap();
        assert_eq!(p, back);
        assert_eq!(p.active_count(), 3);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let err = Prescription::from_indices(4, &[1, 4]).unwrap_err();
        assert!(err.to_string().contains("index 4"), "{err}");
    }

    #[test]
    fn unknown_name_is_named_in_the_error() {
        let dict = HerbDictionary::synthetic(3).unwrap();
        let err = Prescription::from_herb_names(&dict, &["herb_000", "ginseng"]).unwrap_err();
        assert!(err.to_string().contains("ginseng"), "{err}");
    }

    #[test]
    fn tensor_encoding_is_zero_one() {
        let p = Prescription::from_indices(4, &[1, 2]).unwrap();
        let t: Tensor<f32> = p.to_tensor();
        assert_eq!(t.data(), &[0.0, 1.0, 1.0, 0.0]);
    }
}
