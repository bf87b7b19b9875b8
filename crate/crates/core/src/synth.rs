//! Seeded synthetic scenes for demos, tests and benchmarks.
//!
//! A scene is a bright, cloudy sky gradient over a darker textured ground,
//! split at a random horizon, with a few shaded disks and boxes on top. The layout has
//! both a global structure (sky above ground) and local structure (object
//! edges), which is what the two cost terms model.

use rand::Rng;

use crate::costs::{AdjacencyCost, OffsetSet, PositionCost};
use crate::rng;
use crate::GrayImage;

enum Shape {
    Disk {
        cx: f32,
        cy: f32,
        r: f32,
        value: f32,
    },
    Rect {
        x0: f32,
        y0: f32,
        x1: f32,
        y1: f32,
        value: f32,
    },
}

/// Bilinearly interpolated lattice noise in `[0, 1)` with the given cell
/// size in pixels.
struct ValueNoise {
    cols: usize,
    cell: f32,
    lattice: Vec<f32>,
}

impl ValueNoise {
    fn new(width: usize, height: usize, cell: f32, rng: &mut impl Rng) -> Self {
        let cols = (width as f32 / cell) as usize + 2;
        let rows = (height as f32 / cell) as usize + 2;
        Self {
            cols,
            cell,
            lattice: (0..cols * rows).map(|_| rng.gen()).collect(),
        }
    }

    fn at(&self, x: f32, y: f32) -> f32 {
        let (gx, gy) = (x / self.cell, y / self.cell);
        let (ix, iy) = (gx as usize, gy as usize);
        let (fx, fy) = (gx - ix as f32, gy - iy as f32);
        let v = |c: usize, r: usize| self.lattice[r * self.cols + c];
        let top = v(ix, iy) * (1.0 - fx) + v(ix + 1, iy) * fx;
        let bottom = v(ix, iy + 1) * (1.0 - fx) + v(ix + 1, iy + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

pub fn scene(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = rng::stream(seed, 0);
    let (w, h) = (width as f32, height as f32);
    let horizon = h * rng.gen_range(0.35..0.65);
    let sky_top = rng.gen_range(0.8..1.0f32);
    let sky_bottom = rng.gen_range(0.55..0.75f32);
    let ground = rng.gen_range(0.15..0.35f32);
    let freq = rng.gen_range(0.15..0.45f32);
    // Kept as drawn so seeded scenes stay stable.
    #[allow(clippy::approx_constant)]
    let phase = rng.gen_range(0.0..6.28f32);
    let clouds = ValueNoise::new(width, height, rng.gen_range(10.0..20.0), &mut rng);
    let grain = ValueNoise::new(width, height, 4.0, &mut rng);

    let shapes: Vec<Shape> = (0..rng.gen_range(1..4))
        .map(|_| {
            let value = rng.gen_range(0.0..1.0f32);
            if rng.gen_bool(0.5) {
                Shape::Disk {
                    cx: rng.gen_range(0.2..0.8) * w,
                    cy: rng.gen_range(0.3..0.8) * h,
                    r: rng.gen_range(0.08..0.22) * w.min(h),
                    value,
                }
            } else {
                let (cx, cy) = (rng.gen_range(0.2..0.8) * w, rng.gen_range(0.3..0.8) * h);
                let (hw, hh) = (rng.gen_range(0.06..0.2) * w, rng.gen_range(0.06..0.25) * h);
                Shape::Rect {
                    x0: cx - hw,
                    y0: cy - hh,
                    x1: cx + hw,
                    y1: cy + hh,
                    value,
                }
            }
        })
        .collect();

    GrayImage::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f32 + 0.5, y as f32 + 0.5);
        let mut v = if yf < horizon {
            sky_top + (sky_bottom - sky_top) * yf / horizon + 0.15 * (clouds.at(xf, yf) - 0.5)
        } else {
            // texture gets finer towards the horizon, as under perspective
            let depth = 1.0 + 2.0 * (1.0 - (yf - horizon) / (h - horizon));
            let f = freq * depth;
            ground
                + 0.08 * (f * xf + phase).sin() * (0.7 * f * yf).cos()
                + 0.1 * (grain.at(xf, yf) - 0.5)
        };
        for s in &shapes {
            match *s {
                Shape::Disk { cx, cy, r, value } => {
                    if (xf - cx).powi(2) + (yf - cy).powi(2) <= r * r {
                        // lit from the top left
                        v = value + 0.15 * ((cx - xf) + (cy - yf)) / (2.0 * r);
                    }
                }
                Shape::Rect {
                    x0,
                    y0,
                    x1,
                    y1,
                    value,
                } => {
                    if xf >= x0 && xf <= x1 && yf >= y0 && yf <= y1 {
                        v = value + 0.1 * (yf - y0) / (y1 - y0).max(1.0);
                    }
                }
            }
        }
        v
    })
}

/// Four distinct stationary textures, selected by `kind % 4`: flat, vertical
/// stripes, horizontal stripes, checkerboard.
pub fn texture(width: usize, height: usize, kind: usize) -> GrayImage {
    GrayImage::from_fn(width, height, |x, y| match kind % 4 {
        0 => 0.5,
        1 => {
            if (x / 4) % 2 == 0 {
                0.2
            } else {
                0.8
            }
        }
        2 => {
            if (y / 4) % 2 == 0 {
                0.2
            } else {
                0.8
            }
        }
        _ => {
            if ((x / 4) + (y / 4)) % 2 == 0 {
                0.1
            } else {
                0.9
            }
        }
    })
}

/// Cost tables with independent uniform entries in `[0, scale)`. Not
/// normalized; useful as unstructured solver benchmarks.
pub fn random_costs(
    k: usize,
    offsets: &OffsetSet,
    places: usize,
    scale: f32,
    seed: u64,
) -> (AdjacencyCost, PositionCost) {
    let mut rng = rng::stream(seed, 7);
    let adj = (0..k * k * offsets.m())
        .map(|_| rng.gen_range(0.0..scale))
        .collect();
    let pos = (0..k * places).map(|_| rng.gen_range(0.0..scale)).collect();
    (
        AdjacencyCost::from_table(k, offsets.clone(), adj).expect("table sized for k and m"),
        PositionCost::from_table(k, places, pos).expect("table sized for k and places"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_seeded() {
        assert_eq!(scene(32, 32, 4), scene(32, 32, 4));
        assert_ne!(scene(32, 32, 4), scene(32, 32, 5));
    }
}
