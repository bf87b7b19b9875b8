use std::f64::consts::PI;

use rayon::prelude::*;

use super::SamplingSpec;
use crate::{Error, GrayImage, Result};

/// Spatial cells per patch side.
const CELLS_PER_SIDE: usize = 4;
const ORIENTATION_BINS: usize = 8;
/// Components are clipped at this value after the first normalization.
const CLIP: f64 = 0.2;

pub const DESCRIPTOR_DIM: usize = CELLS_PER_SIDE * CELLS_PER_SIDE * ORIENTATION_BINS;

/// Gradient-orientation histogram of one patch: 4x4 spatial cells by 8
/// orientation bins, L2-normalized, clipped at 0.2 and renormalized.
/// Constant patches map to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor(Vec<f32>);

impl Descriptor {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.len() != DESCRIPTOR_DIM {
            return Err(Error::invalid(format!(
                "descriptor must have {} components, got {}",
                DESCRIPTOR_DIM,
                values.len()
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Descriptors and source patches of one image, row-major over the grid.
#[derive(Debug, Clone)]
pub struct DenseFeatures {
    pub sampling: SamplingSpec,
    pub descriptors: Vec<Descriptor>,
    /// `patch_size^2` luminance values per cell.
    pub patches: Vec<Vec<f32>>,
}

struct Gradients {
    width: usize,
    magnitude: Vec<f64>,
    /// Orientation in units of histogram bins, in `[0, 8)`.
    bin: Vec<f64>,
}

impl Gradients {
    fn new(image: &GrayImage) -> Self {
        let (w, h) = (image.width(), image.height());
        let mut magnitude = Vec::with_capacity(w * h);
        let mut bin = Vec::with_capacity(w * h);
        let px = |x: usize, y: usize| f64::from(image.get(x, y));
        for y in 0..h {
            for x in 0..w {
                let gx = px((x + 1).min(w - 1), y) - px(x.saturating_sub(1), y);
                let gy = px(x, (y + 1).min(h - 1)) - px(x, y.saturating_sub(1));
                magnitude.push((gx * gx + gy * gy).sqrt());
                let mut angle = gy.atan2(gx);
                if angle < 0.0 {
                    angle += 2.0 * PI;
                }
                let b = angle * ORIENTATION_BINS as f64 / (2.0 * PI);
                bin.push(if b >= ORIENTATION_BINS as f64 { 0.0 } else { b });
            }
        }
        Self {
            width: w,
            magnitude,
            bin,
        }
    }

    fn describe(&self, x0: usize, y0: usize, patch: usize) -> Descriptor {
        let mut hist = [0f64; DESCRIPTOR_DIM];
        for py in 0..patch {
            let cy = py * CELLS_PER_SIDE / patch;
            for px in 0..patch {
                let cx = px * CELLS_PER_SIDE / patch;
                let idx = (y0 + py) * self.width + x0 + px;
                let mag = self.magnitude[idx];
                if mag == 0.0 {
                    continue;
                }
                let b = self.bin[idx];
                let lower = b.floor();
                let frac = b - lower;
                let lower = lower as usize % ORIENTATION_BINS;
                let upper = (lower + 1) % ORIENTATION_BINS;
                let base = (cy * CELLS_PER_SIDE + cx) * ORIENTATION_BINS;
                hist[base + lower] += mag * (1.0 - frac);
                hist[base + upper] += mag * frac;
            }
        }
        normalize(&mut hist);
        for v in hist.iter_mut() {
            *v = v.min(CLIP);
        }
        normalize(&mut hist);
        Descriptor(hist.iter().map(|&v| v as f32).collect())
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// One descriptor per grid cell, row-major.
pub fn extract_dense_descriptors(
    image: &GrayImage,
    spec: &SamplingSpec,
) -> Result<Vec<Descriptor>> {
    spec.check_image(image)?;
    let grads = Gradients::new(image);
    Ok((0..spec.cells())
        .into_par_iter()
        .map(|cell| {
            let (x0, y0) = spec.anchor(cell);
            grads.describe(x0, y0, spec.patch_size())
        })
        .collect())
}

/// Raw luminance of every sampled patch, row-major.
pub fn extract_patches(image: &GrayImage, spec: &SamplingSpec) -> Result<Vec<Vec<f32>>> {
    spec.check_image(image)?;
    let p = spec.patch_size();
    Ok((0..spec.cells())
        .map(|cell| {
            let (x0, y0) = spec.anchor(cell);
            let mut patch = Vec::with_capacity(p * p);
            for y in y0..y0 + p {
                let row = y * image.width();
                patch.extend_from_slice(&image.pixels()[row + x0..row + x0 + p]);
            }
            patch
        })
        .collect())
}

pub fn extract_dense_features(image: &GrayImage, spec: &SamplingSpec) -> Result<DenseFeatures> {
    Ok(DenseFeatures {
        sampling: *spec,
        descriptors: extract_dense_descriptors(image, spec)?,
        patches: extract_patches(image, spec)?,
    })
}
