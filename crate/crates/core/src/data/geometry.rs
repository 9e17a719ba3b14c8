//! Fixed fractional crop geometry and face segmentation.
//!
//! Faces are assumed pre-aligned, so each organ and region crop is a fixed
//! fractional rectangle of the face square: organ rectangles are a quarter
//! of the face on each side, region rectangles a half. The default layout
//! places them on a canonical front-facing face.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::image::resize_bilinear;

/// A fractional rectangle of the face square, all fields in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CropRect {
    pub top: f64,
    pub left: f64,
    pub height: f64,
    pub width: f64,
}

impl CropRect {
    pub const fn new(top: f64, left: f64, height: f64, width: f64) -> Self {
        CropRect { top, left, height, width }
    }

    fn validate(&self, name: &str, expected_side: f64) -> Result<()> {
        let inside = self.top >= 0.0
            && self.left >= 0.0
            && self.top + self.height <= 1.0 + 1e-9
            && self.left + self.width <= 1.0 + 1e-9;
        if !inside {
            return Err(Error::Config(format!("{name} crop {self:?} leaves the face square")));
        }
        if (self.height - expected_side).abs() > 1e-9 || (self.width - expected_side).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "{name} crop must be {expected_side}x{expected_side} of the face, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Per-crop rectangles for the four organ blocks and three region blocks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CropGeometry {
    pub left_eye: CropRect,
    pub right_eye: CropRect,
    pub nose: CropRect,
    pub mouth: CropRect,
    pub left_cheek: CropRect,
    pub right_cheek: CropRect,
    pub chin: CropRect,
}

impl Default for CropGeometry {
    fn default() -> Self {
        CropGeometry {
            left_eye: CropRect::new(0.25, 0.125, 0.25, 0.25),
            right_eye: CropRect::new(0.25, 0.625, 0.25, 0.25),
            nose: CropRect::new(0.375, 0.375, 0.25, 0.25),
            mouth: CropRect::new(0.625, 0.3125, 0.25, 0.25),
            left_cheek: CropRect::new(0.375, 0.0, 0.5, 0.5),
            right_cheek: CropRect::new(0.375, 0.5, 0.5, 0.5),
            chin: CropRect::new(0.5, 0.25, 0.5, 0.5),
        }
    }
}

impl CropGeometry {
    /// Left eye, right eye, nose, mouth.
    pub fn organ_rects(&self) -> [CropRect; 4] {
        [self.left_eye, self.right_eye, self.nose, self.mouth]
    }

    /// Left cheek, right cheek, chin.
    pub fn region_rects(&self) -> [CropRect; 3] {
        [self.left_cheek, self.right_cheek, self.chin]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rect) in [
            ("left_eye", self.left_eye),
            ("right_eye", self.right_eye),
            ("nose", self.nose),
            ("mouth", self.mouth),
        ] {
            rect.validate(name, 0.25)?;
        }
        for (name, rect) in [
            ("left_cheek", self.left_cheek),
            ("right_cheek", self.right_cheek),
            ("chin", self.chin),
        ] {
            rect.validate(name, 0.5)?;
        }
        Ok(())
    }
}

/// The seven crops of one face, resized for the three-grained branches.
#[derive(Debug, Clone)]
pub struct SegmentedCrops {
    /// Left eye, right eye, nose, mouth: each (s/4, s/4, 3).
    pub organs: Vec<Tensor<f32>>,
    /// Left cheek, right cheek, chin: each (s/2, s/2, 3).
    pub regions: Vec<Tensor<f32>>,
}

/// Cut the seven crops out of a square face and resize them to the branch
/// input sizes. Deterministic: no interpolation state, no rng.
pub fn segment_face(face: &Tensor<f32>, geometry: &CropGeometry) -> Result<SegmentedCrops> {
    if face.rank() != 3 || face.shape()[2] != 3 {
        return Err(Error::InvalidShape(format!(
            "face must be (s, s, 3), got {:?}",
            face.shape()
        )));
    }
    if face.shape()[0] != face.shape()[1] {
        return Err(Error::InvalidShape(format!(
            "face must be square, got {}x{}",
            face.shape()[0],
            face.shape()[1]
        )));
    }
    geometry.validate()?;
    let s = face.shape()[0];

    let organs = geometry
        .organ_rects()
        .iter()
        .map(|r| crop_and_resize(face, r, s / 4))
        .collect::<Result<Vec<_>>>()?;
    let regions = geometry
        .region_rects()
        .iter()
        .map(|r| crop_and_resize(face, r, s / 2))
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentedCrops { organs, regions })
}

fn crop_and_resize(face: &Tensor<f32>, rect: &CropRect, target: usize) -> Result<Tensor<f32>> {
    let s = face.shape()[0];
    let top = ((rect.top * s as f64).round() as usize).min(s - 1);
    let left = ((rect.left * s as f64).round() as usize).min(s - 1);
    let h = ((rect.height * s as f64).round() as usize).clamp(1, s - top);
    let w = ((rect.width * s as f64).round() as usize).clamp(1, s - left);

    let mut data = Vec::with_capacity(h * w * 3);
    for y in top..top + h {
        let row = &face.data()[(y * s + left) * 3..(y * s + left + w) * 3];
        data.extend_from_slice(row);
    }
    let crop = Tensor::from_vec(&[h, w, 3], data)?;
    resize_bilinear(&crop, target, target)
}
