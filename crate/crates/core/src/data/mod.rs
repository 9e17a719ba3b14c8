//! Datasets: herb dictionaries, prescriptions, face images and their crops,
//! augmentation, synthetic generation, and on-disk formats.

mod augment;
mod dataset;
mod dictionary;
mod geometry;
mod image;
mod synthetic;

pub use augment::{augment, flip_horizontal, AugmentParams};
pub use dataset::{expansion_target, Dataset, FaceSample};
pub use dictionary::{HerbDictionary, Prescription};
pub use geometry::{segment_face, CropGeometry, CropRect, SegmentedCrops};
pub use image::{resize_bilinear, RgbImage};
pub use synthetic::{
    decode_pixel_rule, gen_synthetic, oracle_f1, HerbSignal, SignalRegion, SignalSpec,
};
