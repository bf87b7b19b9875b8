//! Grayscale raster used as the input and output medium of the pipeline.

use crate::{Error, Result};

/// Row-major luminance raster with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "pixel {} has value {} outside [0, 1]",
                bad, pixels[bad]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Constant image. `value` is clamped into `[0, 1]`.
    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            pixels: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    /// Builds an image from a function of `(x, y)`; results are clamped.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Luminance conversion `0.299 R + 0.587 G + 0.114 B` of interleaved
    /// RGB samples scaled by `max_value`.
    pub fn from_rgb(width: usize, height: usize, rgb: &[u16], max_value: u16) -> Result<Self> {
        if rgb.len() != 3 * width * height {
            return Err(Error::invalid(format!(
                "{}x{} RGB image needs {} samples, got {}",
                width,
                height,
                3 * width * height,
                rgb.len()
            )));
        }
        if max_value == 0 {
            return Err(Error::invalid("RGB max value must be positive"));
        }
        let scale = 1.0 / f64::from(max_value);
        let pixels = rgb
            .chunks_exact(3)
            .map(|px| {
                let y =
                    0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
                ((y * scale) as f32).clamp(0.0, 1.0)
            })
            .collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    pub fn same_shape(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Copies the `w x h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<GrayImage> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "crop {}x{}+{}+{} exceeds {}x{} image",
                w, h, x0, y0, self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            pixels.extend_from_slice(&self.pixels[row + x0..row + x0 + w]);
        }
        Ok(GrayImage {
            width: w,
            height: h,
            pixels,
        })
    }
}
