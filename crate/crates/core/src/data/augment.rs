//! Random affine augmentation of whole faces.
//!
//! One composed transform per call: rotation about the center, horizontal
//! and vertical translation, isotropic zoom, and an optional horizontal
//! flip. Sampling is bilinear with coordinates clamped to the image, which
//! fills borders with the nearest edge pixels. Labels are never touched;
//! augmented samples keep their source prescription.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Draw ranges for one augmentation; defaults follow the training recipe
/// (rotation up to 25 degrees, 5% shifts, zoom in [0.8, 1.2], random flips).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AugmentParams {
    /// Rotations are drawn from [-rotation_degrees, rotation_degrees].
    pub rotation_degrees: f64,
    /// Shifts are drawn from [-shift_fraction, shift_fraction] of each axis.
    pub shift_fraction: f64,
    pub zoom_low: f64,
    pub zoom_high: f64,
    pub horizontal_flip: bool,
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            rotation_degrees: 25.0,
            shift_fraction: 0.05,
            zoom_low: 0.8,
            zoom_high: 1.2,
            horizontal_flip: true,
        }
    }
}

impl AugmentParams {
    pub fn identity() -> Self {
        AugmentParams {
            rotation_degrees: 0.0,
            shift_fraction: 0.0,
            zoom_low: 1.0,
            zoom_high: 1.0,
            horizontal_flip: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=180.0).contains(&self.rotation_degrees) {
            return Err(Error::Config(format!(
                "rotation must be within 0-180 degrees, got {}",
                self.rotation_degrees
            )));
        }
        if !(0.0..1.0).contains(&self.shift_fraction) {
            return Err(Error::Config(format!(
                "shift fraction must be in [0, 1), got {}",
                self.shift_fraction
            )));
        }
        if !(self.zoom_low > 0.0 && self.zoom_low <= self.zoom_high) {
            return Err(Error::Config(format!(
                "zoom range [{}, {}] is not a positive interval",
                self.zoom_low, self.zoom_high
            )));
        }
        Ok(())
    }
}

/// Mirror the columns of an (h, w, c) image. Applying it twice is the
/// identity.
pub fn flip_horizontal(face: &Tensor<f32>) -> Tensor<f32> {
    let (h, w, c) = (face.shape()[0], face.shape()[1], face.shape()[2]);
    let data = face.data();
    let mut out = vec![0.0f32; data.len()];
    for y in 0..h {
        for x in 0..w {
            let src = (y * w + x) * c;
            let dst = (y * w + (w - 1 - x)) * c;
            out[dst..dst + c].copy_from_slice(&data[src..src + c]);
        }
    }
    Tensor::from_vec(face.shape(), out).expect("same shape")
}

/// Apply one random affine transform. The rng is consumed in a fixed order
/// (rotation, x shift, y shift, zoom, flip) regardless of the parameter
/// values, so draws stay aligned across configurations.
pub fn augment(face: &Tensor<f32>, params: &AugmentParams, rng: &mut Rng) -> Result<Tensor<f32>> {
    params.validate()?;
    if face.rank() != 3 {
        return Err(Error::InvalidShape(format!(
            "augment expects (h, w, channels), got {:?}",
            face.shape()
        )));
    }
    let (h, w, c) = (face.shape()[0], face.shape()[1], face.shape()[2]);

    let angle = rng.uniform(-params.rotation_degrees, params.rotation_degrees).to_radians();
    let shift_x = rng.uniform(-params.shift_fraction, params.shift_fraction) * w as f64;
    let shift_y = rng.uniform(-params.shift_fraction, params.shift_fraction) * h as f64;
    let zoom = rng.uniform(params.zoom_low, params.zoom_high);
    let flip = params.horizontal_flip && rng.bernoulli(0.5);

    let identity = angle == 0.0 && shift_x == 0.0 && shift_y == 0.0 && zoom == 1.0;
    if identity && !flip {
        return Ok(face.clone());
    }
    if identity && flip {
        return Ok(flip_horizontal(face));
    }

    // Inverse mapping: for each output pixel, find the source coordinate of
    // rotate(zoom(.)) + shift about the image center.
    let (sin, cos) = angle.sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let data = face.data();
    let mut out = vec![0.0f32; data.len()];

    for oy in 0..h {
        for ox in 0..w {
            let dx = ox as f64 - cx - shift_x;
            let dy = oy as f64 - cy - shift_y;
            // Rotate by -angle and unzoom.
            let sx = (cos * dx + sin * dy) / zoom + cx;
            let sy = (-sin * dx + cos * dy) / zoom + cy;
            let sx = if flip { w as f64 - 1.0 - sx } else { sx };

            // Clamp to the image: nearest-edge fill at the borders.
            let sx = sx.clamp(0.0, (w - 1) as f64);
            let sy = sy.clamp(0.0, (h - 1) as f64);
            let x0 = sx.floor() as usize;
            let y0 = sy.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let fx = (sx - x0 as f64) as f32;
            let fy = (sy - y0 as f64) as f32;

            let dst = (oy * w + ox) * c;
            for ch in 0..c {
                let p00 = data[(y0 * w + x0) * c + ch];
                let p01 = data[(y0 * w + x1) * c + ch];
                let p10 = data[(y1 * w + x0) * c + ch];
                let p11 = data[(y1 * w + x1) * c + ch];
                let top = p00 + (p01 - p00) * fx;
                let bottom = p10 + (p11 - p10) * fx;
                out[dst + ch] = top + (bottom - top) * fy;
            }
        }
    }
    Tensor::from_vec(face.shape(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_face(seed: u64, s: usize) -> Tensor<f32> {
        Tensor::uniform(&mut Rng::new(seed), &[s, s, 3], 0.0, 1.0).unwrap()
    }

    #[test]
    fn identity_params_return_the_input() {
        let face = random_face(1, 16);
        let out = augment(&face, &AugmentParams::identity(), &mut Rng::new(9)).unwrap();
        assert_eq!(out, face);
    }

    #[test]
    fn flip_reverses_columns_and_is_an_involution() {
        let face = random_face(2, 8);
        let flipped = flip_horizontal(&face);
        for y in 0..8 {
            for x in 0..8 {
                for ch in 0..3 {
                    assert_eq!(flipped.at3(y, x, ch), face.at3(y, 7 - x, ch));
                }
            }
        }
        assert_eq!(flip_horizontal(&flipped), face);
    }

    #[test]
    fn default_params_match_the_training_recipe() {
        let p = AugmentParams::default();
        assert_eq!(p.rotation_degrees, 25.0);
        assert_eq!(p.shift_fraction, 0.05);
        assert_eq!(p.zoom_low, 0.8);
        assert_eq!(p.zoom_high, 1.2);
        assert!(p.horizontal_flip);
        p.validate().unwrap();
    }

    #[test]
    fn out_of_range_params_are_config_errors() {
        let mut p = AugmentParams::default();
        p.rotation_degrees = 181.0;
        assert!(p.validate().is_err());
        let mut p = AugmentParams::default();
        p.shift_fraction = 1.0;
        assert!(p.validate().is_err());
        let mut p = AugmentParams::default();
        p.zoom_low = 0.0;
        assert!(p.validate().is_err());
        let mut p = AugmentParams::default();
        p.zoom_low = 1.5;
        p.zoom_high = 1.2;
        assert!(p.validate().is_err());
    }

    #[test]
    fn augment_is_deterministic_per_seed() {
        let face = random_face(3, 32);
        let a = augment(&face, &AugmentParams::default(), &mut Rng::new(7)).unwrap();
        let b = augment(&face, &AugmentParams::default(), &mut Rng::new(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn output_values_stay_in_range() {
        let face = random_face(4, 32);
        let mut rng = Rng::new(11);
        for _ in 0..5 {
            let out = augment(&face, &AugmentParams::default(), &mut rng).unwrap();
            assert!(out.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn pure_rotation_preserves_the_center_pixel() {
        let mut face = Tensor::<f32>::zeros(&[17, 17, 3]).unwrap();
        face.set3(8, 8, 0, 1.0);
        let params = AugmentParams {
            rotation_degrees: 25.0,
            shift_fraction: 0.0,
            zoom_low: 1.0,
            zoom_high: 1.0,
            horizontal_flip: false,
        };
        let out = augment(&face, &params, &mut Rng::new(2)).unwrap();
        assert!(out.at3(8, 8, 0) > 0.9, "center value {}", out.at3(8, 8, 0));
    }
}
