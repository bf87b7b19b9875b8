//! Reconstruction quality: pixel correlation and layout correctness.

use std::collections::HashSet;

use crate::pipeline::WordGrid;
use crate::{Error, GrayImage, Result};

/// Pearson correlation of the pixels of `a` at `(x, y)` and `b` at
/// `(x + dx, y + dy)` over the region where both exist. `None` when the
/// region is empty; 0 when either side is constant on it.
fn shifted_correlation(a: &GrayImage, b: &GrayImage, dx: isize, dy: isize) -> Option<f64> {
    let (w, h) = (a.width() as isize, a.height() as isize);
    let (x0, x1) = (0.max(-dx), w.min(w - dx));
    let (y0, y1) = (0.max(-dy), h.min(h - dy));
    if x0 >= x1 || y0 >= y1 {
        return None;
    }
    let n = ((x1 - x0) * (y1 - y0)) as f64;
    let pixels = || {
        (y0..y1).flat_map(move |y| {
            (x0..x1).map(move |x| {
                (
                    f64::from(a.get(x as usize, y as usize)),
                    f64::from(b.get((x + dx) as usize, (y + dy) as usize)),
                )
            })
        })
    };
    let (mut sa, mut sb) = (0.0, 0.0);
    for (p, q) in pixels() {
        sa += p;
        sb += q;
    }
    let (ma, mb) = (sa / n, sb / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (p, q) in pixels() {
        let (u, v) = (p - ma, q - mb);
        cov += u * v;
        va += u * u;
        vb += v * v;
    }
    if va <= 0.0 || vb <= 0.0 {
        return Some(0.0);
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

fn check_same_shape(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::invalid(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Pearson correlation of two equally sized images; 0 if either is constant.
pub fn xcorr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(shifted_correlation(a, b, 0, 0).unwrap_or(0.0))
}

/// Largest [`xcorr`] over integer translations within `±max_shift` pixels
/// on each axis, each measured on the overlap of the two images.
pub fn xcorr_shift(a: &GrayImage, b: &GrayImage, max_shift: usize) -> Result<f64> {
    check_same_shape(a, b)?;
    let s = max_shift as isize;
    let mut best = shifted_correlation(a, b, 0, 0).unwrap_or(0.0);
    for dy in -s..=s {
        for dx in -s..=s {
            if let Some(c) = shifted_correlation(a, b, dx, dy) {
                best = best.max(c);
            }
        }
    }
    Ok(best)
}

fn check_grids(layout: &WordGrid, truth: &WordGrid) -> Result<()> {
    if !layout.sampling().same_grid(truth.sampling()) {
        return Err(Error::invalid(
            "layout and ground truth have different grids",
        ));
    }
    Ok(())
}

/// Fraction of cells holding the ground-truth word.
pub fn direct_comparison(layout: &WordGrid, truth: &WordGrid) -> Result<f64> {
    check_grids(layout, truth)?;
    let hits = layout
        .labels()
        .iter()
        .zip(truth.labels())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / layout.len() as f64)
}

const FOUR_NEIGHBORS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

fn ordered_neighbor_pairs(grid: &WordGrid) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    let (w, h) = (
        grid.sampling().grid_w() as isize,
        grid.sampling().grid_h() as isize,
    );
    (0..grid.len()).flat_map(move |cell| {
        let (x, y) = ((cell as isize) % w, (cell as isize) / w);
        FOUR_NEIGHBORS
            .iter()
            .enumerate()
            .filter_map(move |(d, &(dx, dy))| {
                let (nx, ny) = (x + dx, y + dy);
                (nx >= 0 && nx < w && ny >= 0 && ny < h)
                    .then(|| (grid.label(cell), grid.label((ny * w + nx) as usize), d))
            })
    })
}

/// Fraction of ordered 4-neighbor pairs of `layout` whose
/// `(word, neighbor word, direction)` also occurs somewhere in `truth`.
pub fn neighbor_comparison(layout: &WordGrid, truth: &WordGrid) -> Result<f64> {
    check_grids(layout, truth)?;
    let known: HashSet<_> = ordered_neighbor_pairs(truth).collect();
    let (mut total, mut hits) = (0usize, 0usize);
    for pair in ordered_neighbor_pairs(layout) {
        total += 1;
        hits += usize::from(known.contains(&pair));
    }
    if total == 0 {
        return Err(Error::invalid("a 1x1 grid has no neighbor pairs"));
    }
    Ok(hits as f64 / total as f64)
}

pub const CSV_HEADER: &str = "image_id,xcorr,xcorr4,xcorr8,dc,nc,objective,wall_time_s";

/// One reconstruction's scores. Pixel metrics need the original image and
/// layout metrics need the true word grid; both are absent when the input
/// was a bare histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub image_id: String,
    pub xcorr: Option<f64>,
    pub xcorr4: Option<f64>,
    pub xcorr8: Option<f64>,
    pub dc: Option<f64>,
    pub nc: Option<f64>,
    pub objective: Option<f64>,
    pub wall_time_s: f64,
}

impl MetricReport {
    /// Scores a rendering against its original and a recovered layout
    /// against the true grid, as far as each is given. A 1×1 grid gets no NC.
    pub fn evaluate(
        image_id: impl Into<String>,
        rendered: &GrayImage,
        original: Option<&GrayImage>,
        grids: Option<(&WordGrid, &WordGrid)>,
        objective: Option<f64>,
        wall_time_s: f64,
    ) -> Result<Self> {
        let mut report = Self {
            image_id: image_id.into(),
            xcorr: None,
            xcorr4: None,
            xcorr8: None,
            dc: None,
            nc: None,
            objective,
            wall_time_s,
        };
        if let Some(orig) = original {
            report.xcorr = Some(xcorr(rendered, orig)?);
            report.xcorr4 = Some(xcorr_shift(rendered, orig, 4)?);
            report.xcorr8 = Some(xcorr_shift(rendered, orig, 8)?);
        }
        if let Some((layout, truth)) = grids {
            report.dc = Some(direct_comparison(layout, truth)?);
            report.nc = (layout.len() > 1)
                .then(|| neighbor_comparison(layout, truth))
                .transpose()?;
        }
        Ok(report)
    }

    /// CSV row in [`CSV_HEADER`] order; absent values are empty fields.
    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{:.6}", x)).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.image_id.replace([',', '\n'], "_"),
            opt(self.xcorr),
            opt(self.xcorr4),
            opt(self.xcorr8),
            opt(self.dc),
            opt(self.nc),
            opt(self.objective),
            self.wall_time_s
        )
    }
}
