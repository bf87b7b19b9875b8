//! Forward BoVW pipeline: dense sampling, descriptors, codebook, quantization
//! and sum pooling.

mod codebook;
mod descriptor;
mod kmeans;

pub use codebook::{quantize_features, train_codebook, Codebook};
pub use descriptor::{
    extract_dense_descriptors, extract_dense_features, extract_patches, DenseFeatures, Descriptor,
    DESCRIPTOR_DIM,
};
pub use kmeans::{kmeans, nearest, Clustering};

use crate::{Error, GrayImage, Result};

pub const DEFAULT_PATCH_SIZE: usize = 32;
pub const DEFAULT_STRIDE: usize = 8;

/// Geometry of dense sampling: square patches of `patch_size` pixels every
/// `stride` pixels, giving a `grid_w x grid_h` grid of places.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamplingSpec {
    patch_size: usize,
    stride: usize,
    grid_w: usize,
    grid_h: usize,
}

impl SamplingSpec {
    /// Sampling grid for an image of the given size. The stride must divide
    /// `dim - patch_size` on both axes; images are never padded.
    pub fn for_image(
        width: usize,
        height: usize,
        patch_size: usize,
        stride: usize,
    ) -> Result<Self> {
        check_patch(patch_size, stride)?;
        let cells = |dim: usize, axis: &str| -> Result<usize> {
            if dim < patch_size {
                return Err(Error::invalid(format!(
                    "image {} {} is smaller than patch size {}",
                    axis, dim, patch_size
                )));
            }
            if !(dim - patch_size).is_multiple_of(stride) {
                return Err(Error::invalid(format!(
                    "stride {} does not divide image {} {} minus patch size {}",
                    stride, axis, dim, patch_size
                )));
            }
            Ok((dim - patch_size) / stride + 1)
        };
        Ok(Self {
            patch_size,
            stride,
            grid_w: cells(width, "width")?,
            grid_h: cells(height, "height")?,
        })
    }

    /// Sampling grid given directly by its cell counts.
    pub fn from_grid(
        grid_w: usize,
        grid_h: usize,
        patch_size: usize,
        stride: usize,
    ) -> Result<Self> {
        check_patch(patch_size, stride)?;
        Ok(Self {
            patch_size,
            stride,
            grid_w,
            grid_h,
        })
    }

    /// `grid_w x grid_h` grid with the default 32 px patches and 8 px stride.
    pub fn grid(grid_w: usize, grid_h: usize) -> Self {
        Self {
            patch_size: DEFAULT_PATCH_SIZE,
            stride: DEFAULT_STRIDE,
            grid_w,
            grid_h,
        }
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    /// Number of places `N`.
    pub fn cells(&self) -> usize {
        self.grid_w * self.grid_h
    }

    pub fn image_width(&self) -> usize {
        span(self.grid_w, self.stride, self.patch_size)
    }

    pub fn image_height(&self) -> usize {
        span(self.grid_h, self.stride, self.patch_size)
    }

    /// Top-left pixel of the patch sampled at `cell`.
    pub fn anchor(&self, cell: usize) -> (usize, usize) {
        let (col, row) = (cell % self.grid_w, cell / self.grid_w);
        (col * self.stride, row * self.stride)
    }

    pub fn same_grid(&self, other: &SamplingSpec) -> bool {
        self.grid_w == other.grid_w && self.grid_h == other.grid_h
    }

    pub(crate) fn check_image(&self, image: &GrayImage) -> Result<()> {
        if image.width() != self.image_width() || image.height() != self.image_height() {
            return Err(Error::invalid(format!(
                "image is {}x{} but sampling expects {}x{}",
                image.width(),
                image.height(),
                self.image_width(),
                self.image_height()
            )));
        }
        Ok(())
    }
}

fn check_patch(patch_size: usize, stride: usize) -> Result<()> {
    if patch_size == 0 || stride == 0 {
        return Err(Error::invalid("patch size and stride must be at least 1"));
    }
    Ok(())
}

fn span(cells: usize, stride: usize, patch: usize) -> usize {
    if cells == 0 {
        0
    } else {
        (cells - 1) * stride + patch
    }
}

/// Word labels on a sampling grid, row-major. Also used as the decision
/// variable of the layout solvers (see [`crate::qap::Layout`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordGrid {
    sampling: SamplingSpec,
    labels: Vec<usize>,
}

impl WordGrid {
    pub fn new(sampling: SamplingSpec, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != sampling.cells() {
            return Err(Error::invalid(format!(
                "{}x{} grid needs {} labels, got {}",
                sampling.grid_w(),
                sampling.grid_h(),
                sampling.cells(),
                labels.len()
            )));
        }
        Ok(Self { sampling, labels })
    }

    pub fn sampling(&self) -> &SamplingSpec {
        &self.sampling
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, cell: usize) -> usize {
        self.labels[cell]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.labels.swap(a, b);
    }

    pub fn max_label(&self) -> Option<usize> {
        self.labels.iter().copied().max()
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }
}

/// Counts per visual word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BovwHistogram {
    counts: Vec<u32>,
}

impl BovwHistogram {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn zeros(k: usize) -> Self {
        Self { counts: vec![0; k] }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn counts_mut(&mut self) -> &mut [u32] {
        &mut self.counts
    }

    /// Vocabulary size `K`.
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Total number of word instances.
    pub fn total(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    /// Every word instance in ascending label order.
    pub fn instances(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(word, &c)| std::iter::repeat_n(word, c as usize))
            .collect()
    }

    /// L1 distance between two histograms of the same vocabulary.
    pub fn l1_distance(&self, other: &BovwHistogram) -> u64 {
        self.counts
            .iter()
            .zip(&other.counts)
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum()
    }
}

/// Sum pooling: number of cells holding each word.
pub fn pool(grid: &WordGrid, k: usize) -> Result<BovwHistogram> {
    let mut counts = vec![0u32; k];
    for (cell, &label) in grid.labels().iter().enumerate() {
        if label >= k {
            return Err(Error::invalid(format!(
                "cell {} holds word {} but the vocabulary has {} words",
                cell, label, k
            )));
        }
        counts[label] += 1;
    }
    Ok(BovwHistogram { counts })
}
