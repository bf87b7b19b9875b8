//! Lloyd's k-means with k-means++ seeding.

use rand::Rng;
use rayon::prelude::*;

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Clustering {
    /// `k` centroids of dimension `dim`, flattened row-major.
    pub centroids: Vec<f32>,
    pub dim: usize,
    /// Cluster of every input point under the final centroids.
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

/// Index of the centroid closest to `point` in Euclidean distance, with
/// ties resolved to the lowest index, and the squared distance to it.
pub fn nearest(point: &[f32], centroids: &[f32], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assign(points: &[&[f32]], centroids: &[f32], dim: usize) -> Vec<(usize, f64)> {
    points
        .par_iter()
        .map(|p| nearest(p, centroids, dim))
        .collect()
}

/// Clusters `points` into `k` groups.
///
/// Seeding is k-means++ driven by `seed`. Each iteration recomputes centroids
/// as cluster means, re-seeds empty clusters from the point farthest from its
/// centroid, and reassigns; iteration stops after `iters` rounds or as soon
/// as no assignment changes.
pub fn kmeans(points: &[&[f32]], k: usize, iters: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > points.len() {
        return Err(Error::invalid(format!(
            "k = {} exceeds the number of points ({})",
            k,
            points.len()
        )));
    }
    if iters == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(Error::invalid(format!(
            "point {} has dimension {}, expected {}",
            bad,
            points[bad].len(),
            dim
        )));
    }

    let mut centroids = seed_plus_plus(points, k, dim, seed);
    let mut assigned = assign(points, &centroids, dim);
    let mut iterations = 0;
    for _ in 0..iters {
        iterations += 1;
        update_centroids(points, &assigned, &mut centroids, k, dim);
        let next = assign(points, &centroids, dim);
        let changed = next.iter().zip(&assigned).any(|(a, b)| a.0 != b.0);
        assigned = next;
        if !changed {
            break;
        }
    }

    Ok(Clustering {
        centroids,
        dim,
        assignments: assigned.into_iter().map(|(c, _)| c).collect(),
        iterations,
    })
}

fn seed_plus_plus(points: &[&[f32]], k: usize, dim: usize, seed: u64) -> Vec<f32> {
    let mut rng = rng::stream(seed, 0);
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..points.len());
    centroids.extend_from_slice(points[first]);
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, points[first])).collect();
    for _ in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = dist.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        centroids.extend_from_slice(points[pick]);
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, points[pick]));
        }
    }
    centroids
}

fn update_centroids(
    points: &[&[f32]],
    assigned: &[(usize, f64)],
    centroids: &mut [f32],
    k: usize,
    dim: usize,
) {
    let mut sums = vec![0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &(c, _)) in points.iter().zip(assigned) {
        counts[c] += 1;
        for (s, &v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p.iter()) {
            *s += f64::from(v);
        }
    }

    // Farthest points first, lowest index among equal distances.
    let mut far: Vec<usize> = Vec::new();
    if counts.contains(&0) {
        far = (0..points.len()).collect();
        far.sort_by(|&a, &b| assigned[b].1.total_cmp(&assigned[a].1).then(a.cmp(&b)));
    }
    let mut far = far.into_iter();

    for c in 0..k {
        let dst = &mut centroids[c * dim..(c + 1) * dim];
        if counts[c] > 0 {
            let n = counts[c] as f64;
            for (d, s) in dst.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                *d = (s / n) as f32;
            }
        } else if let Some(p) = far.next() {
            dst.copy_from_slice(points[p]);
        }
    }
}
