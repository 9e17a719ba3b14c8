//! Synthetic planted-signal datasets.
//!
//! Real clinical face/prescription pairs are private, so verification runs
//! on generated data whose labels are *visually decodable by construction*:
//! an active herb paints a known signal (a radial blob in one crop region,
//! or a global channel boost for whole-face herbs) into a known color
//! channel. A brute-force pixel rule that reads those regions back recovers
//! the labels; datasets are only considered usable when that oracle scores
//! near-perfect f1, which guarantees the planted signals are learnable
//! before any training happens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::dataset::{Dataset, FaceSample};
use super::dictionary::{HerbDictionary, Prescription};
use super::geometry::{CropGeometry, CropRect};

/// Where one herb's visual signal lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalRegion {
    LeftEye,
    RightEye,
    Nose,
    Mouth,
    LeftCheek,
    RightCheek,
    Chin,
    /// Whole-face signal: a uniform boost of one channel.
    Face,
}

impl SignalRegion {
    /// The crop rectangle carrying this signal; `None` for whole-face.
    pub fn rect(self, geometry: &CropGeometry) -> Option<CropRect> {
        match self {
            SignalRegion::LeftEye => Some(geometry.left_eye),
            SignalRegion::RightEye => Some(geometry.right_eye),
            SignalRegion::Nose => Some(geometry.nose),
            SignalRegion::Mouth => Some(geometry.mouth),
            SignalRegion::LeftCheek => Some(geometry.left_cheek),
            SignalRegion::RightCheek => Some(geometry.right_cheek),
            SignalRegion::Chin => Some(geometry.chin),
            SignalRegion::Face => None,
        }
    }

    /// Organ-block regions feed the multi-scale network's organ branch.
    pub fn is_organ(self) -> bool {
        matches!(
            self,
            SignalRegion::LeftEye | SignalRegion::RightEye | SignalRegion::Nose | SignalRegion::Mouth
        )
    }
}

/// How a herb's activity is painted into its region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalStyle {
    /// Active: blob present. Inactive: nothing.
    Presence,
    /// A blob is always present; activity moves it from the "off" position
    /// to the "on" position, a displacement of two code offsets. The
    /// information lives at a finer spatial scale than a pooled feature
    /// map, which is exactly what an organ-resolution branch preserves.
    PositionCoded,
}

/// One herb's planted signal: region, color channel, coding style, and how
/// often the herb is prescribed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HerbSignal {
    pub herb: usize,
    pub region: SignalRegion,
    pub channel: usize,
    pub style: SignalStyle,
    pub frequency: f64,
}

/// The full recipe for a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    /// Base intensity of every pixel.
    pub background: f64,
    /// Uniform per-pixel noise amplitude (drawn from +-noise).
    pub noise: f64,
    /// Peak boost of a region blob.
    pub amplitude: f64,
    /// Blob radius as a fraction of the region rectangle's half-extent.
    pub blob_radius: f64,
    /// Whole-face signals boost their channel by amplitude * face_boost.
    pub face_boost: f64,
    /// Label-uncorrelated blobs scattered uniformly over the face; they
    /// force a model to care about *where* a blob sits, not just whether
    /// one exists anywhere.
    pub distractors: usize,
    /// Distractor peak as a fraction of `amplitude`; kept below the pixel
    /// rule's contrast threshold so the oracle ignores them.
    pub distractor_strength: f64,
    /// Random offset of each planted blob from its nominal position, as a
    /// fraction of the region extent. Keeps detectors position-tolerant,
    /// which is what affine augmentation produces at train time.
    pub position_jitter: f64,
    /// Displacement of position-coded blobs from the region center, as a
    /// fraction of the region extent; "on" and "off" positions sit at
    /// +offset and -offset along the herb's code axis.
    pub code_offset: f64,
    /// Probability that a herb's painted evidence contradicts its label
    /// (blob at the wrong position, or presence flipped). Zero keeps the
    /// data fully decodable; a few percent mimics clinical ambiguity and
    /// gives validation loss a floor that overfitting crosses.
    pub evidence_noise: f64,
    pub signals: Vec<HerbSignal>,
}

impl SignalSpec {
    /// Layout used by the verification datasets: herbs are assigned to
    /// (region, channel) slots with the first half of the dictionary
    /// confined to organ crops and the rest spread over cheeks, chin, and
    /// whole-face signals. Roughly a third of the herbs are "frequent", the
    /// rest rare, mimicking a skewed prescription distribution.
    pub fn default_for(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("herb count must be positive".into()));
        }
        let organ_slots: Vec<(SignalRegion, usize)> = (0..3)
            .flat_map(|ch| {
                [
                    SignalRegion::LeftEye,
                    SignalRegion::RightEye,
                    SignalRegion::Nose,
                    SignalRegion::Mouth,
                ]
                .into_iter()
                .map(move |r| (r, ch))
            })
            .collect();
        let other_slots: Vec<(SignalRegion, usize)> = (0..3)
            .flat_map(|ch| {
                [
                    SignalRegion::LeftCheek,
                    SignalRegion::RightCheek,
                    SignalRegion::Chin,
                    SignalRegion::Face,
                ]
                .into_iter()
                .map(move |r| (r, ch))
            })
            .collect();
        if n > organ_slots.len() + other_slots.len() {
            return Err(Error::Config(format!(
                "default signal layout supports up to 24 herbs, got {n}"
            )));
        }
        let organ_herbs = (n / 2).min(organ_slots.len());
        // The skewed head of the dictionary: roughly 36% of herbs are
        // "frequent", and those are the organ-coded ones, as the frequent
        // herbs of a prescription dataset are the ones a diagnosis keys on.
        let frequent = (0.36 * n as f64).round() as usize;
        let mut signals = Vec::with_capacity(n);
        for herb in 0..n {
            let (region, channel, style) = if herb < organ_herbs {
                let (region, channel) = organ_slots[herb];
                (region, channel, SignalStyle::PositionCoded)
            } else {
                let (region, channel) = other_slots[herb - organ_herbs];
                (region, channel, SignalStyle::Presence)
            };
            let frequency = if herb < frequent { 0.45 } else { 0.13 };
            signals.push(HerbSignal { herb, region, channel, style, frequency });
        }
        Ok(SignalSpec {
            background: 0.3,
            noise: 0.08,
            amplitude: 0.5,
            blob_radius: 0.35,
            face_boost: 0.4,
            distractors: 6,
            distractor_strength: 0.3,
            position_jitter: 0.04,
            code_offset: 0.18,
            evidence_noise: 0.0,
            signals,
        })
    }

    pub fn validate(&self, herb_count: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.background)
            || self.noise < 0.0
            || self.amplitude <= 0.0
            || !(0.0 < self.blob_radius && self.blob_radius <= 1.0)
            || self.face_boost <= 0.0
            || !(0.0..1.0).contains(&self.distractor_strength)
            || !(0.0..0.5).contains(&self.position_jitter)
            || !(0.0..0.5).contains(&self.code_offset)
            || !(0.0..0.5).contains(&self.evidence_noise)
        {
            return Err(Error::Config(format!("signal spec has out-of-range fields: {self:?}")));
        }
        if self.position_jitter >= self.code_offset / 2.0 + 1e-9 {
            return Err(Error::Config(format!(
                "position jitter {} would blur the code offset {}",
                self.position_jitter, self.code_offset
            )));
        }
        let mut seen_herbs = vec![false; herb_count];
        let mut seen_slots = std::collections::HashSet::new();
        for signal in &self.signals {
            if signal.herb >= herb_count {
                return Err(Error::Config(format!(
                    "signal references herb {} but the dictionary has {herb_count}",
                    signal.herb
                )));
            }
            if signal.channel >= 3 {
                return Err(Error::Config(format!(
                    "signal for herb {} uses channel {} (images have 3)",
                    signal.herb, signal.channel
                )));
            }
            if !(0.0..=1.0).contains(&signal.frequency) {
                return Err(Error::Config(format!(
                    "signal for herb {} has frequency {}",
                    signal.herb, signal.frequency
                )));
            }
            if std::mem::replace(&mut seen_herbs[signal.herb], true) {
                return Err(Error::Config(format!("herb {} has two signals", signal.herb)));
            }
            if !seen_slots.insert((signal.region, signal.channel)) {
                return Err(Error::Config(format!(
                    "slot {:?}/channel {} is assigned twice",
                    signal.region, signal.channel
                )));
            }
        }
        Ok(())
    }

    /// Herbs whose signal is confined to an organ crop.
    pub fn organ_herbs(&self) -> Vec<usize> {
        self.signals.iter().filter(|s| s.region.is_organ()).map(|s| s.herb).collect()
    }
}

/// Pixel box of a fractional rectangle on an s-sized face.
fn rect_box(rect: &CropRect, s: usize) -> (usize, usize, usize, usize) {
    let top = ((rect.top * s as f64).round() as usize).min(s - 1);
    let left = ((rect.left * s as f64).round() as usize).min(s - 1);
    let h = ((rect.height * s as f64).round() as usize).clamp(1, s - top);
    let w = ((rect.width * s as f64).round() as usize).clamp(1, s - left);
    (top, left, h, w)
}

/// Generate `count` labelled faces of size `s` with `n` herbs.
pub fn gen_synthetic(
    count: usize,
    n: usize,
    s: usize,
    spec: &SignalSpec,
    geometry: &CropGeometry,
    rng: &Rng,
) -> Result<Dataset> {
    if count == 0 || n == 0 {
        return Err(Error::Config(format!(
            "count and herb count must be positive, got {count} and {n}"
        )));
    }
    if s < 8 {
        return Err(Error::Config(format!("image size {s} is too small")));
    }
    spec.validate(n)?;
    geometry.validate()?;

    let dictionary = HerbDictionary::synthetic(n)?;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let mut sample_rng = rng.derive(i as u64);
        let (face, label) = gen_sample(n, s, spec, geometry, &mut sample_rng)?;
        samples.push(FaceSample { id: format!("syn{i:05}"), face, label, source: None });
    }
    Ok(Dataset { dictionary, image_size: s, samples })
}

fn gen_sample(
    n: usize,
    s: usize,
    spec: &SignalSpec,
    geometry: &CropGeometry,
    rng: &mut Rng,
) -> Result<(Tensor<f32>, Prescription)> {
    // Draw the prescription first, then paint it.
    let mut label = Prescription::empty(n);
    for signal in &spec.signals {
        if rng.bernoulli(signal.frequency) {
            label.set(signal.herb);
        }
    }
    // Real prescriptions are never shorter than two herbs.
    while label.active_count() < 2 && !spec.signals.is_empty() {
        let pick = spec.signals[rng.below(spec.signals.len())].herb;
        label.set(pick);
    }

    let mut face = Tensor::<f32>::zeros(&[s, s, 3])?;
    for v in face.data_mut() {
        *v = (spec.background + rng.uniform(-spec.noise, spec.noise)) as f32;
    }

    for signal in &spec.signals {
        // With probability evidence_noise the painted evidence contradicts
        // the label; the draw always happens so streams stay aligned.
        let contradict = rng.bernoulli(spec.evidence_noise);
        let active = label.is_set(signal.herb) != contradict;
        match signal.region.rect(geometry) {
            None => {
                if !active {
                    continue;
                }
                let boost = (spec.amplitude * spec.face_boost) as f32;
                let ch = signal.channel;
                let data = face.data_mut();
                for px in 0..s * s {
                    data[px * 3 + ch] += boost;
                }
            }
            Some(rect) => {
                if signal.style == SignalStyle::Presence && !active {
                    continue;
                }
                let (top, left, h, w) = rect_box(&rect, s);
                let jitter_y = rng.uniform(-spec.position_jitter, spec.position_jitter) * h as f64;
                let jitter_x = rng.uniform(-spec.position_jitter, spec.position_jitter) * w as f64;
                let mut cy = top as f64 + (h as f64 - 1.0) / 2.0 + jitter_y;
                let mut cx = left as f64 + (w as f64 - 1.0) / 2.0 + jitter_x;
                if signal.style == SignalStyle::PositionCoded {
                    let (ay, ax) = code_axis(signal.herb);
                    let sign = if active { 1.0 } else { -1.0 };
                    cy += sign * spec.code_offset * h as f64 * ay;
                    cx += sign * spec.code_offset * w as f64 * ax;
                }
                let radius = spec.blob_radius * (h.min(w) as f64) / 2.0;
                paint_blob(&mut face, cy, cx, radius, signal.channel, spec.amplitude);
            }
        }
    }

    // Distractors: same look as organ blobs, random position and channel,
    // weaker peak, drawn whether or not any herb is active.
    let distractor_radius = spec.blob_radius * (s as f64 / 4.0) / 2.0;
    for _ in 0..spec.distractors {
        let cy = rng.uniform(distractor_radius, s as f64 - distractor_radius);
        let cx = rng.uniform(distractor_radius, s as f64 - distractor_radius);
        let ch = rng.below(3);
        paint_blob(
            &mut face,
            cy,
            cx,
            distractor_radius,
            ch,
            spec.amplitude * spec.distractor_strength,
        );
    }

    for v in face.data_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok((face, label))
}

/// Direction along which a position-coded herb's blob moves: alternating
/// horizontal / vertical by herb index.
fn code_axis(herb: usize) -> (f64, f64) {
    if herb % 2 == 0 {
        (0.0, 1.0)
    } else {
        (1.0, 0.0)
    }
}

/// Add a radially falling-off blob of `peak` height to one channel.
fn paint_blob(face: &mut Tensor<f32>, cy: f64, cx: f64, radius: f64, channel: usize, peak: f64) {
    let s = face.shape()[0];
    let y0 = (cy - radius).floor().max(0.0) as usize;
    let y1 = ((cy + radius).ceil() as usize).min(s - 1);
    let x0 = (cx - radius).floor().max(0.0) as usize;
    let x1 = ((cx + radius).ceil() as usize).min(s - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
            if d2 <= radius * radius {
                let falloff = 1.0 - d2 / (radius * radius);
                let v = face.at3(y, x, channel) + (peak * falloff) as f32;
                face.set3(y, x, channel, v);
            }
        }
    }
}

/// The brute-force decoder: read each signal's region back from the pixels
/// and threshold the local contrast. Independent of every model path.
pub fn decode_pixel_rule(
    face: &Tensor<f32>,
    spec: &SignalSpec,
    geometry: &CropGeometry,
) -> Result<Vec<usize>> {
    let s = face.shape()[0];
    let mut active = Vec::new();
    for signal in &spec.signals {
        let is_active = match signal.region.rect(geometry) {
            None => {
                let mut sum = 0.0f64;
                for px in 0..s * s {
                    sum += face.data()[px * 3 + signal.channel] as f64;
                }
                let mean = sum / (s * s) as f64;
                mean > spec.background + spec.amplitude * spec.face_boost / 2.0
            }
            Some(rect) => {
                let (top, left, h, w) = rect_box(&rect, s);
                let cy = top as f64 + (h as f64 - 1.0) / 2.0;
                let cx = left as f64 + (w as f64 - 1.0) / 2.0;
                let radius = spec.blob_radius * (h.min(w) as f64) / 2.0;
                let jitter = spec.position_jitter * h.max(w) as f64 + 1.0;

                match signal.style {
                    SignalStyle::PositionCoded => {
                        // Sign test: is the matched response stronger at the
                        // "on" position than at the "off" position?
                        let (ay, ax) = code_axis(signal.herb);
                        let (dy, dx) =
                            (spec.code_offset * h as f64 * ay, spec.code_offset * w as f64 * ax);
                        let on = scan_response(face, signal.channel, cy + dy, cx + dx, radius, jitter);
                        let off =
                            scan_response(face, signal.channel, cy - dy, cx - dx, radius, jitter);
                        on > off
                    }
                    SignalStyle::Presence => {
                        // Baseline: the rectangle outside any blob placement.
                        let mut outer = (0.0f64, 0usize);
                        for y in top..top + h {
                            for x in left..left + w {
                                let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
                                if d2 > (radius + jitter) * (radius + jitter) {
                                    outer.0 += face.at3(y, x, signal.channel) as f64;
                                    outer.1 += 1;
                                }
                            }
                        }
                        if outer.1 == 0 {
                            false
                        } else {
                            let baseline = outer.0 / outer.1 as f64;
                            let best =
                                scan_response(face, signal.channel, cy, cx, radius, jitter);
                            // A centred planted blob responds at 2/3 of its
                            // peak; distractors stay well below.
                            best - baseline > spec.amplitude * 0.33
                        }
                    }
                }
            }
        };
        if is_active {
            active.push(signal.herb);
        }
    }
    Ok(active)
}

/// Strongest falloff-weighted (matched filter) response of one channel in a
/// scan window around (cy, cx).
fn scan_response(
    face: &Tensor<f32>,
    channel: usize,
    cy: f64,
    cx: f64,
    radius: f64,
    jitter: f64,
) -> f64 {
    let s = face.shape()[0];
    let steps = jitter.ceil() as i64;
    let mut best = f64::NEG_INFINITY;
    for dy in -steps..=steps {
        for dx in -steps..=steps {
            let (py, px) = (cy + dy as f64, cx + dx as f64);
            let (mut acc, mut weight) = (0.0f64, 0.0f64);
            let y_lo = ((py - radius).floor().max(0.0)) as usize;
            let y_hi = (((py + radius).ceil()).max(0.0) as usize).min(s - 1);
            let x_lo = ((px - radius).floor().max(0.0)) as usize;
            let x_hi = (((px + radius).ceil()).max(0.0) as usize).min(s - 1);
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    let d2 = (y as f64 - py).powi(2) + (x as f64 - px).powi(2);
                    if d2 <= radius * radius {
                        let w = 1.0 - d2 / (radius * radius);
                        acc += w * face.at3(y, x, channel) as f64;
                        weight += w;
                    }
                }
            }
            if weight > 0.0 {
                best = best.max(acc / weight);
            }
        }
    }
    best
}

/// Mean per-sample f1 of the pixel rule against the planted labels.
pub fn oracle_f1(dataset: &Dataset, spec: &SignalSpec, geometry: &CropGeometry) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Data("cannot score an empty dataset".into()));
    }
    let mut total = 0.0f64;
    for sample in &dataset.samples {
        let predicted = decode_pixel_rule(&sample.face, spec, geometry)?;
        let real = sample.label.indices();
        let true_positives = predicted.iter().filter(|h| real.contains(h)).count() as f64;
        let precision =
            if predicted.is_empty() { 0.0 } else { true_positives / predicted.len() as f64 };
        let recall = if real.is_empty() { 0.0 } else { true_positives / real.len() as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        total += f1;
    }
    Ok(total / dataset.len() as f64)
}
