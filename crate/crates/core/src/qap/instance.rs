use std::sync::OnceLock;

use crate::costs::{AdjacencyCost, PositionCost};
use crate::pipeline::{SamplingSpec, WordGrid};
use crate::{Error, Result};

const NO_OFFSET: u16 = u16::MAX;

/// One layout-recovery problem: cost tables, weighting and grid geometry,
/// with neighbor lists precomputed for the grid.
///
/// The objective of a layout `x` is
/// `(1 - lambda) * sum_{k, l in offsets(k)} Ca[x_k][x_l][d(k,l)] + lambda * sum_k Cp[x_k][k]`.
#[derive(Debug)]
pub struct QapInstance<'a> {
    adjacency: &'a AdjacencyCost,
    position: &'a PositionCost,
    lambda: f64,
    sampling: SamplingSpec,
    out_start: Vec<usize>,
    out_edges: Vec<(usize, usize)>,
    in_start: Vec<usize>,
    in_edges: Vec<(usize, usize)>,
    pair_offset: Vec<u16>,
    rows: OnceLock<RowTables>,
}

/// Cost rows laid out contiguously over one free word, pre-scaled by
/// `1 - lambda` / `lambda`, for the incremental gain tables.
#[derive(Debug)]
pub(crate) struct RowTables {
    /// `[j][d][x] = (1 - lambda) * Ca[x][j][d]`
    pub by_target: Vec<f64>,
    /// `[i][d][x] = (1 - lambda) * Ca[i][x][d]`
    pub by_source: Vec<f64>,
    /// `[c][x] = lambda * Cp[x][c]`
    pub position: Vec<f64>,
}

impl<'a> QapInstance<'a> {
    pub fn new(
        adjacency: &'a AdjacencyCost,
        position: &'a PositionCost,
        lambda: f64,
        sampling: SamplingSpec,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("lambda {} outside [0, 1]", lambda)));
        }
        if adjacency.k() != position.k() {
            return Err(Error::invalid(format!(
                "adjacency cost has {} words, position cost has {}",
                adjacency.k(),
                position.k()
            )));
        }
        let n = sampling.cells();
        if position.places() != n {
            return Err(Error::invalid(format!(
                "position cost has {} places, grid has {}",
                position.places(),
                n
            )));
        }
        let offsets = adjacency.offsets();
        let mut outs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut ins: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut pair_offset = vec![NO_OFFSET; n * n];
        for (cell, out) in outs.iter_mut().enumerate() {
            for d in 0..offsets.m() {
                if let Some(nb) = offsets.neighbor(&sampling, cell, d) {
                    out.push((nb, d));
                    ins[nb].push((cell, d));
                    pair_offset[cell * n + nb] = d as u16;
                }
            }
        }
        let (out_start, out_edges) = flatten(outs);
        let (in_start, in_edges) = flatten(ins);
        Ok(Self {
            adjacency,
            position,
            lambda,
            sampling,
            out_start,
            out_edges,
            in_start,
            in_edges,
            pair_offset,
            rows: OnceLock::new(),
        })
    }

    pub fn adjacency(&self) -> &AdjacencyCost {
        self.adjacency
    }

    pub fn position(&self) -> &PositionCost {
        self.position
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sampling(&self) -> &SamplingSpec {
        &self.sampling
    }

    pub fn k(&self) -> usize {
        self.adjacency.k()
    }

    /// Number of places `N`.
    pub fn n(&self) -> usize {
        self.sampling.cells()
    }

    /// `(target cell, offset index)` for every in-grid offset of `cell`.
    #[inline]
    pub fn out_neighbors(&self, cell: usize) -> &[(usize, usize)] {
        &self.out_edges[self.out_start[cell]..self.out_start[cell + 1]]
    }

    /// `(source cell, offset index)` for every cell that reaches `cell`.
    #[inline]
    pub fn in_neighbors(&self, cell: usize) -> &[(usize, usize)] {
        &self.in_edges[self.in_start[cell]..self.in_start[cell + 1]]
    }

    /// Offset index of `l - k`, if `l` is within the offset set of `k`.
    #[inline]
    pub fn offset_between(&self, k: usize, l: usize) -> Option<usize> {
        let d = self.pair_offset[k * self.n() + l];
        (d != NO_OFFSET).then_some(d as usize)
    }

    pub fn check_layout(&self, layout: &WordGrid) -> Result<()> {
        if !layout.sampling().same_grid(&self.sampling) {
            return Err(Error::invalid(format!(
                "layout is {}x{} but the instance grid is {}x{}",
                layout.sampling().grid_w(),
                layout.sampling().grid_h(),
                self.sampling.grid_w(),
                self.sampling.grid_h()
            )));
        }
        if let Some(max) = layout.max_label() {
            if max >= self.k() {
                return Err(Error::invalid(format!(
                    "layout holds word {} but the vocabulary has {} words",
                    max,
                    self.k()
                )));
            }
        }
        Ok(())
    }

    /// Adjacency and position sums `(E^a, E^p)` of a label vector.
    pub fn energy_terms(&self, labels: &[usize]) -> (f64, f64) {
        let mut adj = Neumaier::default();
        let mut pos = Neumaier::default();
        for (cell, &i) in labels.iter().enumerate() {
            for &(l, d) in self.out_neighbors(cell) {
                adj.add(f64::from(self.adjacency.get(i, labels[l], d)));
            }
            pos.add(f64::from(self.position.get(i, cell)));
        }
        (adj.sum(), pos.sum())
    }

    pub(crate) fn objective_of(&self, labels: &[usize]) -> f64 {
        let (adj, pos) = self.energy_terms(labels);
        (1.0 - self.lambda) * adj + self.lambda * pos
    }

    pub fn objective(&self, layout: &WordGrid) -> Result<f64> {
        self.check_layout(layout)?;
        Ok(self.objective_of(layout.labels()))
    }

    /// Lawler-form coefficient `c_ijkl` for words `i, j` at places `k, l`:
    /// `(1 - lambda) * Ca_ijkl + (lambda / N) * Cp_ik`, where `Ca_ijkl` is zero
    /// unless `l` lies within the offset set of `k`. Summing `c_ijkl x_ik x_jl`
    /// over all indices reproduces [`Self::objective`], because every
    /// assignment fills all `N` places.
    pub fn lawler_coefficient(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let adj = self
            .offset_between(k, l)
            .map_or(0.0, |d| f64::from(self.adjacency.get(i, j, d)));
        (1.0 - self.lambda) * adj
            + self.lambda / self.n() as f64 * f64::from(self.position.get(i, k))
    }

    /// Change of the objective when the labels at `a` and `b` are exchanged.
    ///
    /// Touches only the position terms of both cells and the adjacency terms
    /// inside their offset neighborhoods, so the cost is `O(m)`. A term
    /// linking `a` and `b` directly is counted once.
    pub fn swap_delta(&self, labels: &[usize], a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (la, lb) = (labels[a], labels[b]);
        if la == lb {
            return 0.0;
        }
        let after = |c: usize| {
            if c == a {
                lb
            } else if c == b {
                la
            } else {
                labels[c]
            }
        };
        let ca = self.adjacency;
        let mut diff = 0.0;
        for (cell, old, new, other) in [(a, la, lb, b), (b, lb, la, a)] {
            for &(l, d) in self.out_neighbors(cell) {
                diff += f64::from(ca.get(new, after(l), d)) - f64::from(ca.get(old, labels[l], d));
            }
            for &(c, d) in self.in_neighbors(cell) {
                if c != other {
                    diff +=
                        f64::from(ca.get(labels[c], new, d)) - f64::from(ca.get(labels[c], old, d));
                }
            }
        }
        let cp = self.position;
        let pos = f64::from(cp.get(lb, a)) + f64::from(cp.get(la, b))
            - f64::from(cp.get(la, a))
            - f64::from(cp.get(lb, b));
        (1.0 - self.lambda) * diff + self.lambda * pos
    }

    pub(crate) fn rows(&self) -> &RowTables {
        self.rows.get_or_init(|| {
            let (k, m, n) = (self.k(), self.adjacency.offsets().m(), self.n());
            let w_adj = 1.0 - self.lambda;
            let mut by_target = vec![0f64; k * m * k];
            let mut by_source = vec![0f64; k * m * k];
            for i in 0..k {
                for j in 0..k {
                    for d in 0..m {
                        let v = w_adj * f64::from(self.adjacency.get(i, j, d));
                        by_target[(j * m + d) * k + i] = v;
                        by_source[(i * m + d) * k + j] = v;
                    }
                }
            }
            let mut position = vec![0f64; n * k];
            for c in 0..n {
                for x in 0..k {
                    position[c * k + x] = self.lambda * f64::from(self.position.get(x, c));
                }
            }
            RowTables {
                by_target,
                by_source,
                position,
            }
        })
    }
}

fn flatten(lists: Vec<Vec<(usize, usize)>>) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut start = Vec::with_capacity(lists.len() + 1);
    let mut edges = Vec::new();
    start.push(0);
    for l in lists {
        edges.extend(l);
        start.push(edges.len());
    }
    (start, edges)
}

/// Compensated summation; keeps full-objective evaluations accurate enough
/// to compare against incremental deltas.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}
