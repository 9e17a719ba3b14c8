//! 8-bit RGB image files and conversion to/from float tensors.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// An 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return Err(Error::Data(format!(
                "{width}x{height} RGB image needs {} bytes, got {}",
                width * height * 3,
                pixels.len()
            )));
        }
        Ok(RgbImage { width, height, pixels })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::Data(format!("cannot open image {}: {e}", path.display())))?;
        let decoder = png::Decoder::new(file);
        let mut reader = decoder
            .read_info()
            .map_err(|e| Error::Data(format!("cannot decode {}: {e}", path.display())))?;
        let mut buf = vec![0u8; reader.output_buffer_size()];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::Data(format!("cannot decode {}: {e}", path.display())))?;
        buf.truncate(info.buffer_size());
        let (width, height) = (info.width as usize, info.height as usize);
        let pixels = match info.color_type {
            png::ColorType::Rgb => buf,
            png::ColorType::Rgba => {
                buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect()
            }
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
            other => {
                return Err(Error::Data(format!(
                    "unsupported png color type {other:?} in {}",
                    path.display()
                )));
            }
        };
        RgbImage::new(width, height, pixels)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut encoder =
            png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Data(format!("cannot encode {}: {e}", path.display())))?;
        writer
            .write_image_data(&self.pixels)
            .map_err(|e| Error::Data(format!("cannot encode {}: {e}", path.display())))?;
        Ok(())
    }

    /// (height, width, 3) tensor scaled to [0, 1].
    pub fn to_tensor(&self) -> Tensor<f32> {
        Tensor::from_vec(
            &[self.height, self.width, 3],
            self.pixels.iter().map(|&b| b as f32 / 255.0).collect(),
        )
        .expect("pixel buffer matches shape")
    }

    /// Quantize a [0, 1] float image back to 8-bit RGB.
    pub fn from_tensor(t: &Tensor<f32>) -> Result<Self> {
        if t.rank() != 3 || t.shape()[2] != 3 {
            return Err(Error::Data(format!(
                "expected (h, w, 3) tensor, got {:?}",
                t.shape()
            )));
        }
        let pixels = t
            .data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        RgbImage::new(t.shape()[1], t.shape()[0], pixels)
    }
}

/// Bilinear resample of an (h, w, c) tensor, pixel centers aligned, edge
/// clamped. An identity-size resize reproduces the input exactly.
pub fn resize_bilinear(t: &Tensor<f32>, out_h: usize, out_w: usize) -> Result<Tensor<f32>> {
    if t.rank() != 3 {
        return Err(Error::InvalidShape(format!(
            "resize expects (h, w, channels), got {:?}",
            t.shape()
        )));
    }
    let (h, w, c) = (t.shape()[0], t.shape()[1], t.shape()[2]);
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidShape("resize target has a zero extent".into()));
    }
    let scale_y = h as f32 / out_h as f32;
    let scale_x = w as f32 / out_w as f32;
    let data = t.data();
    let mut out = vec![0.0f32; out_h * out_w * c];

    for oy in 0..out_h {
        let sy = ((oy as f32 + 0.5) * scale_y - 0.5).clamp(0.0, (h - 1) as f32);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f32;
        for ox in 0..out_w {
            let sx = ((ox as f32 + 0.5) * scale_x - 0.5).clamp(0.0, (w - 1) as f32);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f32;
            let dst = (oy * out_w + ox) * c;
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
    Tensor::from_vec(&[out_h, out_w, c], out)
}
