//! Dense N-dimensional arrays.
//!
//! Row-major, channels-last for images: a face is (height, width, channels).
//! Tensors are plain owned buffers; construction validates that every extent
//! is at least 1 and that the data length matches the shape product.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<E: Scalar = f32> {
    shape: Vec<usize>,
    data: Vec<E>,
}

fn validate_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("shape has no dimensions".into()));
    }
    if let Some(pos) = shape.iter().position(|&d| d == 0) {
        return Err(Error::InvalidShape(format!(
            "extent {pos} of shape {shape:?} is zero"
        )));
    }
    Ok(shape.iter().product())
}

impl<E: Scalar> Tensor<E> {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = validate_shape(shape)?;
        Ok(Tensor { shape: shape.to_vec(), data: vec![E::ZERO; len] })
    }

    pub fn ones(shape: &[usize]) -> Result<Self> {
        Self::filled(shape, E::ONE)
    }

    pub fn filled(shape: &[usize], value: E) -> Result<Self> {
        let len = validate_shape(shape)?;
        Ok(Tensor { shape: shape.to_vec(), data: vec![value; len] })
    }

    /// Uniform draws in [lo, hi), consuming `rng` once per element in
    /// row-major order.
    pub fn uniform(rng: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> Result<Self> {
        let len = validate_shape(shape)?;
        let data = (0..len).map(|_| E::from_f64(rng.uniform(lo, hi))).collect();
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn from_vec(shape: &[usize], data: Vec<E>) -> Result<Self> {
        let len = validate_shape(shape)?;
        if data.len() != len {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<E> {
        self.data
    }

    /// Same data, new shape; the element count must match.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let len = validate_shape(shape)?;
        if len != self.data.len() {
            return Err(Error::InvalidShape(format!(
                "cannot reshape {:?} ({} values) into {shape:?} ({len} values)",
                self.shape,
                self.data.len()
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data: self.data.clone() })
    }

    /// Flatten to one dimension.
    pub fn flatten(&self) -> Self {
        Tensor { shape: vec![self.data.len()], data: self.data.clone() }
    }

    #[inline]
    pub fn at3(&self, h: usize, w: usize, c: usize) -> E {
        debug_assert_eq!(self.rank(), 3);
        self.data[(h * self.shape[1] + w) * self.shape[2] + c]
    }

    #[inline]
    pub fn set3(&mut self, h: usize, w: usize, c: usize, value: E) {
        debug_assert_eq!(self.rank(), 3);
        self.data[(h * self.shape[1] + w) * self.shape[2] + c] = value;
    }

    pub fn map(&self, f: impl Fn(E) -> E) -> Self {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn map_inplace(&mut self, f: impl Fn(E) -> E) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    fn zip_with(&self, other: &Self, context: &str, f: impl Fn(E, E) -> E) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: other.shape.clone(),
                context: context.into(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: other.shape.clone(),
                context: "add_assign".into(),
            });
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, factor: E) -> Self {
        self.map(|v| v * factor)
    }

    /// Sum with a fixed left-to-right accumulation order.
    pub fn sum(&self) -> E {
        self.data.iter().fold(E::ZERO, |acc, &v| acc + v)
    }

    pub fn mean(&self) -> E {
        self.sum() / E::from_f64(self.data.len() as f64)
    }

    pub fn max_value(&self) -> E {
        self.data.iter().fold(self.data[0], |acc, &v| acc.maximum(v))
    }

    /// Element-type conversion (f32 <-> f64).
    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| T::from_f64(v.to_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_and_ones_fill() {
        let z = Tensor::<f32>::zeros(&[2, 2]).unwrap();
        assert_eq!(z.data(), &[0.0; 4]);
        let o = Tensor::<f32>::ones(&[3]).unwrap();
        assert_eq!(o.data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(matches!(Tensor::<f32>::zeros(&[]), Err(Error::InvalidShape(_))));
        assert!(matches!(Tensor::<f32>::zeros(&[2, 0, 3]), Err(Error::InvalidShape(_))));
        assert!(Tensor::<f32>::from_vec(&[3], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn uniform_is_deterministic_per_seed() {
        let a = Tensor::<f32>::uniform(&mut Rng::new(7), &[4], -1.0, 1.0).unwrap();
        let b = Tensor::<f32>::uniform(&mut Rng::new(7), &[4], -1.0, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn elementwise_add_and_mul() {
        let a = Tensor::<f32>::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::<f32>::from_vec(&[2], vec![3.0, 4.0]).unwrap();
        assert_eq!(a.add(&b).unwrap().data(), &[4.0, 6.0]);
        let zero = Tensor::<f32>::zeros(&[2]).unwrap();
        assert_eq!(a.mul(&zero).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn mismatched_shapes_name_both() {
        let a = Tensor::<f32>::zeros(&[2, 3]).unwrap();
        let b = Tensor::<f32>::zeros(&[3, 2]).unwrap();
        let err = a.add(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[3, 2]"), "{msg}");
    }

    #[test]
    fn reduce_sum_left_to_right() {
        let t = Tensor::<f32>::from_vec(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.sum(), 6.0);
        assert_eq!(t.max_value(), 3.0);
        assert_eq!(t.mean(), 2.0);
    }

    #[test]
    fn reshape_round_trip() {
        let t = Tensor::<f32>::uniform(&mut Rng::new(1), &[2, 6], 0.0, 1.0).unwrap();
        let back = t.reshape(&[3, 4]).unwrap().reshape(&[2, 6]).unwrap();
        assert_eq!(t, back);
        assert!(t.reshape(&[5]).is_err());
    }

    #[test]
    fn channels_last_indexing() {
        // 2x2 image, 3 channels: value encodes (h, w, c).
        let mut t = Tensor::<f32>::zeros(&[2, 2, 3]).unwrap();
        t.set3(1, 0, 2, 7.0);
        assert_eq!(t.at3(1, 0, 2), 7.0);
        assert_eq!(t.data()[(1 * 2 + 0) * 3 + 2], 7.0);
    }

    #[test]
    fn cast_preserves_values() {
        let t = Tensor::<f32>::from_vec(&[2], vec![0.5, -1.25]).unwrap();
        let d: Tensor<f64> = t.cast();
        assert_eq!(d.data(), &[0.5, -1.25]);
    }
}
