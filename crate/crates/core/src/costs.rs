//! Corpus statistics that score how natural a layout is.
//!
//! * [`AdjacencyCost`] holds `-ln P(word j at offset d | word i)` for every
//!   offset in an [`OffsetSet`], learned from co-occurrence counts.
//! * [`PositionCost`] holds `-ln P(place k | word i)`, learned from
//!   occurrence counts.
//!
//! Both add one to every count before normalizing, so every entry is finite
//! and non-negative.

use crate::pipeline::{SamplingSpec, WordGrid};
use crate::{Error, Result};

/// Relative grid displacements `(dx, dy)` considered neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetSet {
    offsets: Vec<(i32, i32)>,
}

impl OffsetSet {
    /// All displacements of a `(2r+1) x (2r+1)` window except the center,
    /// row-major. `m` must equal `(2r+1)^2 - 1`; `m = 48` is the 7x7 window.
    pub fn square(m: usize) -> Result<Self> {
        let side = ((m + 1) as f64).sqrt().round() as usize;
        if m == 0 || side * side != m + 1 || side.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "neighbor count {} is not (2r+1)^2 - 1 for any r >= 1",
                m
            )));
        }
        let r = (side / 2) as i32;
        let offsets = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .filter(|&d| d != (0, 0))
            .collect();
        Ok(Self { offsets })
    }

    /// Explicit offsets; must be distinct, non-zero, and fit in a signed byte.
    pub fn from_offsets(offsets: Vec<(i32, i32)>) -> Result<Self> {
        for (i, &(dx, dy)) in offsets.iter().enumerate() {
            if (dx, dy) == (0, 0) {
                return Err(Error::invalid("offset (0, 0) is not a neighbor"));
            }
            if i8::try_from(dx).is_err() || i8::try_from(dy).is_err() {
                return Err(Error::invalid(format!(
                    "offset ({}, {}) out of range",
                    dx, dy
                )));
            }
            if offsets[..i].contains(&(dx, dy)) {
                return Err(Error::invalid(format!("duplicate offset ({}, {})", dx, dy)));
            }
        }
        Ok(Self { offsets })
    }

    pub fn m(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn get(&self, d: usize) -> (i32, i32) {
        self.offsets[d]
    }

    pub fn index_of(&self, dx: i32, dy: i32) -> Option<usize> {
        self.offsets.iter().position(|&o| o == (dx, dy))
    }

    /// Largest absolute coordinate over all offsets.
    pub fn radius(&self) -> i32 {
        self.offsets
            .iter()
            .map(|&(dx, dy)| dx.abs().max(dy.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Cell reached from `cell` by offset `d`, if it lies on the grid.
    #[inline]
    pub fn neighbor(&self, sampling: &SamplingSpec, cell: usize, d: usize) -> Option<usize> {
        let (w, h) = (sampling.grid_w() as i64, sampling.grid_h() as i64);
        let (dx, dy) = self.offsets[d];
        let x = (cell as i64 % w) + i64::from(dx);
        let y = (cell as i64 / w) + i64::from(dy);
        (x >= 0 && x < w && y >= 0 && y < h).then(|| (y * w + x) as usize)
    }
}

/// Local adjacency cost, `table[(i * K + j) * m + d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyCost {
    k: usize,
    offsets: OffsetSet,
    table: Vec<f32>,
}

impl AdjacencyCost {
    pub fn from_table(k: usize, offsets: OffsetSet, table: Vec<f32>) -> Result<Self> {
        if table.len() != k * k * offsets.m() {
            return Err(Error::invalid(format!(
                "adjacency table needs {} entries, got {}",
                k * k * offsets.m(),
                table.len()
            )));
        }
        Ok(Self { k, offsets, table })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn offsets(&self) -> &OffsetSet {
        &self.offsets
    }

    pub fn table(&self) -> &[f32] {
        &self.table
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, d: usize) -> f32 {
        self.table[(i * self.k + j) * self.offsets.m() + d]
    }
}

/// Global position cost, `table[i * N + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionCost {
    k: usize,
    places: usize,
    table: Vec<f32>,
}

impl PositionCost {
    pub fn from_table(k: usize, places: usize, table: Vec<f32>) -> Result<Self> {
        if table.len() != k * places {
            return Err(Error::invalid(format!(
                "position table needs {} entries, got {}",
                k * places,
                table.len()
            )));
        }
        Ok(Self { k, places, table })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of places `N`.
    pub fn places(&self) -> usize {
        self.places
    }

    pub fn table(&self) -> &[f32] {
        &self.table
    }

    #[inline]
    pub fn get(&self, word: usize, place: usize) -> f32 {
        self.table[word * self.places + place]
    }
}

fn check_labels(grid: &WordGrid, k: usize, index: usize) -> Result<()> {
    match grid.max_label() {
        Some(max) if max >= k => Err(Error::invalid(format!(
            "corpus grid {} holds word {} but the vocabulary has {} words",
            index, max, k
        ))),
        _ => Ok(()),
    }
}

/// `-ln((c + 1) / sum(c + 1))` for each count in `row`.
fn smoothed_neg_log(row: &[u64], out: &mut [f32]) {
    let total: f64 = row.iter().map(|&c| c as f64 + 1.0).sum();
    let log_total = total.ln();
    for (o, &c) in out.iter_mut().zip(row) {
        *o = (log_total - (c as f64 + 1.0).ln()) as f32;
    }
}

/// Learns the local adjacency cost from a corpus of word grids.
///
/// For every cell and every offset whose target cell lies on the grid, the
/// ordered pair (word at cell, word at target) is counted under that offset.
/// Pairs leaving the grid are skipped. Counts are smoothed by +1 and
/// normalized over the second word for each (first word, offset).
pub fn learn_adjacency_cost(
    corpus: &[WordGrid],
    k: usize,
    offsets: &OffsetSet,
) -> Result<AdjacencyCost> {
    if k == 0 {
        return Err(Error::invalid("vocabulary must have at least one word"));
    }
    let m = offsets.m();
    if let Some(first) = corpus.first() {
        for (idx, g) in corpus.iter().enumerate() {
            if g.sampling() != first.sampling() {
                return Err(Error::invalid(format!(
                    "corpus grid {} has a different sampling than grid 0",
                    idx
                )));
            }
            check_labels(g, k, idx)?;
        }
    }

    // counts indexed [i][d][j] so each normalized row is contiguous
    let mut counts = vec![0u64; k * m * k];
    for g in corpus {
        let labels = g.labels();
        for (cell, &i) in labels.iter().enumerate() {
            for d in 0..m {
                if let Some(nb) = offsets.neighbor(g.sampling(), cell, d) {
                    counts[(i * m + d) * k + labels[nb]] += 1;
                }
            }
        }
    }

    let mut table = vec![0f32; k * k * m];
    let mut row = vec![0f32; k];
    for i in 0..k {
        for d in 0..m {
            smoothed_neg_log(&counts[(i * m + d) * k..(i * m + d + 1) * k], &mut row);
            for (j, &v) in row.iter().enumerate() {
                table[(i * k + j) * m + d] = v;
            }
        }
    }
    AdjacencyCost::from_table(k, offsets.clone(), table)
}

/// Learns the global position cost: per-word occurrence counts over the
/// `places` grid cells, smoothed by +1 and normalized over places.
pub fn learn_position_cost(corpus: &[WordGrid], k: usize, places: usize) -> Result<PositionCost> {
    if k == 0 || places == 0 {
        return Err(Error::invalid("vocabulary and grid must be non-empty"));
    }
    let mut counts = vec![0u64; k * places];
    for (idx, g) in corpus.iter().enumerate() {
        if g.len() != places {
            return Err(Error::invalid(format!(
                "corpus grid {} has {} places, expected {}",
                idx,
                g.len(),
                places
            )));
        }
        check_labels(g, k, idx)?;
        for (cell, &i) in g.labels().iter().enumerate() {
            counts[i * places + cell] += 1;
        }
    }
    let mut table = vec![0f32; k * places];
    for (src, dst) in counts
        .chunks_exact(places)
        .zip(table.chunks_exact_mut(places))
    {
        smoothed_neg_log(src, dst);
    }
    PositionCost::from_table(k, places, table)
}
