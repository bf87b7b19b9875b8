use rayon::prelude::*;

use super::kmeans::{kmeans, nearest};
use super::{DenseFeatures, Descriptor, SamplingSpec, WordGrid};
use crate::{Error, Result};

/// Visual-word dictionary: `k` descriptor centroids, each paired with the
/// mean of the training patches quantized to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    patch_size: usize,
    centroids: Vec<f32>,
    mean_patches: Vec<f32>,
    train_counts: Vec<u32>,
}

impl Codebook {
    pub fn new(
        dim: usize,
        patch_size: usize,
        centroids: Vec<f32>,
        mean_patches: Vec<f32>,
        train_counts: Vec<u32>,
    ) -> Result<Self> {
        let k = train_counts.len();
        if k == 0 || dim == 0 || patch_size == 0 {
            return Err(Error::invalid(
                "codebook needs k, dim and patch size of at least 1",
            ));
        }
        if centroids.len() != k * dim {
            return Err(Error::invalid(format!(
                "expected {} centroid values, got {}",
                k * dim,
                centroids.len()
            )));
        }
        if mean_patches.len() != k * patch_size * patch_size {
            return Err(Error::invalid(format!(
                "expected {} patch values, got {}",
                k * patch_size * patch_size,
                mean_patches.len()
            )));
        }
        if mean_patches.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("mean patch values must lie in [0, 1]"));
        }
        Ok(Self {
            dim,
            patch_size,
            centroids,
            mean_patches,
            train_counts,
        })
    }

    pub fn k(&self) -> usize {
        self.train_counts.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn centroid(&self, word: usize) -> &[f32] {
        &self.centroids[word * self.dim..(word + 1) * self.dim]
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    pub fn mean_patch(&self, word: usize) -> &[f32] {
        let len = self.patch_size * self.patch_size;
        &self.mean_patches[word * len..(word + 1) * len]
    }

    pub fn mean_patches(&self) -> &[f32] {
        &self.mean_patches
    }

    pub fn train_counts(&self) -> &[u32] {
        &self.train_counts
    }

    /// Nearest word to `values`; ties go to the lowest index.
    pub fn quantize(&self, values: &[f32]) -> Result<usize> {
        if values.len() != self.dim {
            return Err(Error::invalid(format!(
                "descriptor has dimension {}, codebook expects {}",
                values.len(),
                self.dim
            )));
        }
        Ok(nearest(values, &self.centroids, self.dim).0)
    }

    pub fn quantize_descriptor(&self, d: &Descriptor) -> Result<usize> {
        self.quantize(d.values())
    }

    /// Quantizes a grid of descriptors into a word grid.
    pub fn quantize_grid(
        &self,
        sampling: &SamplingSpec,
        descriptors: &[Descriptor],
    ) -> Result<WordGrid> {
        if let Some(d) = descriptors.first() {
            if d.values().len() != self.dim {
                return Err(Error::invalid(format!(
                    "descriptor has dimension {}, codebook expects {}",
                    d.values().len(),
                    self.dim
                )));
            }
        }
        let labels = descriptors
            .par_iter()
            .map(|d| nearest(d.values(), &self.centroids, self.dim).0)
            .collect();
        WordGrid::new(*sampling, labels)
    }
}

/// Quantizes extracted features of one image.
pub fn quantize_features(features: &DenseFeatures, codebook: &Codebook) -> Result<WordGrid> {
    codebook.quantize_grid(&features.sampling, &features.descriptors)
}

/// Trains a `k`-word codebook by k-means over every descriptor of every image.
///
/// Mean patches average the source patches of the final assignments; words
/// that end up with no members get a flat mid-gray patch.
pub fn train_codebook(
    sets: &[DenseFeatures],
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<Codebook> {
    let Some(first) = sets.first() else {
        return Err(Error::invalid(
            "codebook training needs at least one descriptor set",
        ));
    };
    let patch_size = first.sampling.patch_size();
    for (i, s) in sets.iter().enumerate() {
        if s.sampling.patch_size() != patch_size {
            return Err(Error::invalid(format!(
                "descriptor set {} uses patch size {}, expected {}",
                i,
                s.sampling.patch_size(),
                patch_size
            )));
        }
        if s.patches.len() != s.descriptors.len() {
            return Err(Error::invalid(format!(
                "descriptor set {} has {} descriptors but {} patches",
                i,
                s.descriptors.len(),
                s.patches.len()
            )));
        }
    }

    let points: Vec<&[f32]> = sets
        .iter()
        .flat_map(|s| s.descriptors.iter().map(|d| d.values()))
        .collect();
    let patches: Vec<&[f32]> = sets
        .iter()
        .flat_map(|s| s.patches.iter().map(|p| p.as_slice()))
        .collect();
    let clustering = kmeans(&points, k, iters, seed)?;

    let plen = patch_size * patch_size;
    let mut sums = vec![0f64; k * plen];
    let mut counts = vec![0u32; k];
    for (&word, patch) in clustering.assignments.iter().zip(&patches) {
        if patch.len() != plen {
            return Err(Error::invalid(format!(
                "patch has {} values, expected {}",
                patch.len(),
                plen
            )));
        }
        counts[word] += 1;
        for (s, &v) in sums[word * plen..(word + 1) * plen]
            .iter_mut()
            .zip(patch.iter())
        {
            *s += f64::from(v);
        }
    }
    let mean_patches = sums
        .chunks_exact(plen)
        .zip(&counts)
        .flat_map(|(chunk, &n)| {
            chunk.iter().map(move |&s| {
                if n == 0 {
                    0.5
                } else {
                    ((s / f64::from(n)) as f32).clamp(0.0, 1.0)
                }
            })
        })
        .collect();

    Codebook::new(
        clustering.dim,
        patch_size,
        clustering.centroids,
        mean_patches,
        counts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::DESCRIPTOR_DIM;

    fn unit(i: usize) -> Descriptor {
        let mut v = vec![0.0; DESCRIPTOR_DIM];
        v[i] = 1.0;
        Descriptor::new(v).unwrap()
    }

    fn features(descs: Vec<Descriptor>, patch_values: &[f32]) -> DenseFeatures {
        let n = descs.len();
        DenseFeatures {
            sampling: SamplingSpec::from_grid(n, 1, 2, 1).unwrap(),
            descriptors: descs,
            patches: patch_values.iter().map(|&v| vec![v; 4]).collect(),
        }
    }

    #[test]
    fn two_points_two_words() {
        let set = features(vec![unit(0), unit(5)], &[0.1, 0.9]);
        let cb = train_codebook(&[set], 2, 20, 4).unwrap();
        let mut cents: Vec<&[f32]> = (0..2).map(|i| cb.centroid(i)).collect();
        cents.sort_by(|a, b| b[0].total_cmp(&a[0]));
        assert_eq!(cents[0], unit(0).values());
        assert_eq!(cents[1], unit(5).values());
        let w0 = cb.quantize_descriptor(&unit(0)).unwrap();
        assert_eq!(cb.mean_patch(w0), &[0.1; 4]);
    }

    #[test]
    fn single_word_averages_all_patches() {
        let set = features(vec![unit(3); 4], &[0.0, 0.2, 0.4, 1.0]);
        let cb = train_codebook(&[set], 1, 5, 0).unwrap();
        assert_eq!(cb.centroid(0), unit(3).values());
        for &v in cb.mean_patch(0) {
            assert!((v - 0.4).abs() < 1e-6);
        }
        assert_eq!(cb.train_counts(), &[4]);
    }

    #[test]
    fn too_many_words_rejected() {
        let set = features(vec![unit(0), unit(1)], &[0.5, 0.5]);
        assert!(matches!(
            train_codebook(&[set], 3, 5, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn quantize_exact_tie_and_dimension() {
        let mut centroids = vec![0f32; 5 * 2];
        // word 1 at (1, 0), word 4 at (-1, 0), word 3 at (5, 5)
        centroids[2] = 1.0;
        centroids[8] = -1.0;
        centroids[6] = 5.0;
        centroids[7] = 5.0;
        // words 0 and 2 sit far away
        centroids[0] = 100.0;
        centroids[4] = 100.0;
        let cb = Codebook::new(2, 1, centroids, vec![0.5; 5], vec![1; 5]).unwrap();
        assert_eq!(cb.quantize(&[5.0, 5.0]).unwrap(), 3);
        assert_eq!(cb.quantize(&[0.0, 0.0]).unwrap(), 1);
        assert!(cb.quantize(&[0.0]).is_err());
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let img = crate::synth::scene(64, 64, 8);
        let spec = SamplingSpec::for_image(64, 64, 32, 8).unwrap();
        let f = crate::pipeline::extract_dense_features(&img, &spec).unwrap();
        let a = train_codebook(std::slice::from_ref(&f), 6, 30, 77).unwrap();
        let b = train_codebook(std::slice::from_ref(&f), 6, 30, 77).unwrap();
        assert_eq!(a, b);
        // re-quantizing a distinct centroid returns its own index
        for i in 0..a.k() {
            let c = a.centroid(i);
            if (0..a.k()).filter(|&j| a.centroid(j) == c).count() == 1 {
                assert_eq!(a.quantize(c).unwrap(), i);
            }
        }
    }
}
