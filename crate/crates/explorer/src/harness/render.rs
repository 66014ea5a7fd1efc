//! Trajectory rendering: binary PPM (P6) images at a configurable scale.
//! The background encodes the ground-truth AoI field (grayscale, tinted
//! red where probability is high), the flight path is purple and darkens
//! with repeated visits, region centroids are green, and the victim cell
//! (if any) is yellow.

use crate::env::GroundTruthMap;
use crate::error::Result;
use crate::mapping::RegionGrid;
use std::path::Path;

/// Purple shade for a cell visited `v` times: all three channels shrink
/// strictly from v=1 to v=2 and keep darkening until they saturate.
fn path_color(v: u32) -> [u8; 3] {
    let shade = 185u32.saturating_sub(35 * (v.saturating_sub(1))).max(25) as u8;
    [shade, shade / 3, shade]
}

/// Background color of a cell with AoI probability `p`.
fn background_color(p: f64) -> [u8; 3] {
    let p = p.clamp(0.0, 1.0);
    let base = 235.0 - p * 120.0;
    let r = (base + p * 60.0).round().clamp(0.0, 255.0) as u8;
    let g = base.round().clamp(0.0, 255.0) as u8;
    [r, g, g]
}

const CENTROID_COLOR: [u8; 3] = [0, 190, 70];
const VICTIM_COLOR: [u8; 3] = [255, 215, 0];

struct Canvas {
    w: usize,
    h: usize,
    scale: usize,
    data: Vec<u8>,
}

impl Canvas {
    fn new(w: usize, h: usize, scale: usize) -> Self {
        Canvas { w, h, scale, data: vec![0; w * scale * h * scale * 3] }
    }

    /// Fills the whole cell block.
    fn fill_cell(&mut self, x: usize, y: usize, color: [u8; 3]) {
        self.fill_block(x, y, 0, color);
    }

    /// Fills the cell block inset by `margin` pixels on every side.
    fn fill_block(&mut self, x: usize, y: usize, margin: usize, color: [u8; 3]) {
        let s = self.scale;
        let width_px = self.w * s;
        for py in (y * s + margin)..((y + 1) * s - margin) {
            for px in (x * s + margin)..((x + 1) * s - margin) {
                let i = (py * width_px + px) * 3;
                self.data[i..i + 3].copy_from_slice(&color);
            }
        }
    }

    /// Marks a cell with an inset block so the background stays visible
    /// around it (full cell at small scales).
    fn mark_cell(&mut self, x: usize, y: usize, color: [u8; 3]) {
        self.fill_block(x, y, self.scale / 4, color);
    }

    fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(self.data.len() + 32);
        out.extend_from_slice(format!("P6\n{} {}\n255\n", self.w * self.scale, self.h * self.scale).as_bytes());
        out.extend_from_slice(&self.data);
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Renders a flight path over its map and writes a P6 image of exactly
/// (W·scale)×(H·scale) pixels. `path_cells` is the pose sequence
/// including the start cell; an empty path yields the background only.
/// When a region grid is given its centroids are marked.
pub fn render_trajectory(
    truth: &GroundTruthMap,
    path_cells: &[(usize, usize)],
    grid: Option<&RegionGrid>,
    scale: usize,
    out: &Path,
) -> Result<()> {
    assert!(scale >= 1, "render scale must be positive");
    let mut canvas = Canvas::new(truth.w, truth.h, scale);
    for y in 0..truth.h {
        for x in 0..truth.w {
            canvas.fill_cell(x, y, background_color(truth.at(x, y)));
        }
    }

    let mut visits = vec![0u32; truth.w * truth.h];
    for &(x, y) in path_cells {
        assert!(x < truth.w && y < truth.h, "path cell ({x},{y}) off the map");
        visits[y * truth.w + x] += 1;
    }
    for y in 0..truth.h {
        for x in 0..truth.w {
            let v = visits[y * truth.w + x];
            if v > 0 {
                canvas.fill_cell(x, y, path_color(v));
            }
        }
    }

    if let Some(g) = grid {
        for region in &g.regions {
            canvas.mark_cell(region.centroid.x, region.centroid.y, CENTROID_COLOR);
        }
    }
    if let Some((vx, vy)) = truth.victim {
        canvas.mark_cell(vx, vy, VICTIM_COLOR);
    }
    canvas.write_ppm(out)
}
