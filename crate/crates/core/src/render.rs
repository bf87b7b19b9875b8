//! Layout-to-pixels rendering by additive patch synthesis.

use crate::pipeline::Codebook;
use crate::qap::Layout;
use crate::{Error, GrayImage, Result};

/// Value of pixels no patch covers.
pub const UNCOVERED: f32 = 0.5;

/// Accumulator for overlapping patches; pixels are averaged uniformly over
/// the patches covering them.
#[derive(Debug, Clone)]
pub struct RenderCanvas {
    width: usize,
    height: usize,
    accum: Vec<f64>,
    weight: Vec<u32>,
}

impl RenderCanvas {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            accum: vec![0.0; width * height],
            weight: vec![0; width * height],
        }
    }

    /// Adds a `size`×`size` patch with its top-left corner at `(x0, y0)`.
    /// Parts falling outside the canvas are dropped.
    pub fn add_patch(&mut self, x0: usize, y0: usize, size: usize, patch: &[f32]) {
        debug_assert_eq!(patch.len(), size * size);
        for py in 0..size.min(self.height.saturating_sub(y0)) {
            let row = (y0 + py) * self.width;
            for px in 0..size.min(self.width.saturating_sub(x0)) {
                self.accum[row + x0 + px] += f64::from(patch[py * size + px]);
                self.weight[row + x0 + px] += 1;
            }
        }
    }

    pub fn finish(self) -> GrayImage {
        let pixels = self
            .accum
            .iter()
            .zip(&self.weight)
            .map(|(&a, &w)| {
                if w > 0 {
                    (a / f64::from(w)) as f32
                } else {
                    UNCOVERED
                }
            })
            .collect();
        GrayImage::new(self.width, self.height, pixels).expect("canvas averages stay in [0, 1]")
    }
}

/// Places every word's mean patch at its cell anchor and averages overlaps.
/// The output is `(grid - 1) * stride + patch_size` pixels along each axis.
pub fn render_layout(layout: &Layout, cb: &Codebook) -> Result<GrayImage> {
    let s = layout.sampling();
    if s.patch_size() != cb.patch_size() {
        return Err(Error::invalid(format!(
            "layout uses {} px patches, codebook has {} px patches",
            s.patch_size(),
            cb.patch_size()
        )));
    }
    if let Some(max) = layout.max_label() {
        if max >= cb.k() {
            return Err(Error::invalid(format!(
                "word {} not in a codebook of {} words",
                max,
                cb.k()
            )));
        }
    }
    let mut canvas = RenderCanvas::new(s.image_width(), s.image_height());
    for (cell, &word) in layout.labels().iter().enumerate() {
        let (x, y) = s.anchor(cell);
        canvas.add_patch(x, y, s.patch_size(), cb.mean_patch(word));
    }
    Ok(canvas.finish())
}
