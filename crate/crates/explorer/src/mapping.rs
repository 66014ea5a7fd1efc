//! The agent's knowledge: allocentric belief map `M`, visit map `V`,
//! egocentric window extraction, and the region grid used to schedule
//! exploration.

use crate::env::{AgentPose, Observation, OBS_SIDE, SENTINEL};
use crate::error::{Error, Result};

/// Side of the egocentric window (the observation side squared).
pub const EGO_SIDE: usize = OBS_SIDE * OBS_SIDE;
/// Cells in an egocentric window.
pub const EGO_AREA: usize = EGO_SIDE * EGO_SIDE;
/// Half-width of the egocentric window (the agent sits at the center).
pub const EGO_HALF: usize = EGO_SIDE / 2;

/// Default prior belief for never-observed cells (maximum entropy).
pub const DEFAULT_PRIOR: f64 = 0.5;

/// How repeated observations of a cell combine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BeliefUpdate {
    /// Last observation wins (noiseless default).
    Overwrite,
    /// First observation overwrites; later ones blend
    /// `belief := (1−rate)·belief + rate·observed` (for noisy scenarios).
    Ema(f64),
}

/// Per-cell belief about AoI probability plus a "seen" mask.
#[derive(Clone, Debug)]
pub struct AllocentricMap {
    pub w: usize,
    pub h: usize,
    pub belief: Vec<f64>,
    pub seen: Vec<bool>,
    pub prior: f64,
    pub update: BeliefUpdate,
}

impl AllocentricMap {
    pub fn new(w: usize, h: usize) -> Self {
        Self::with_update(w, h, DEFAULT_PRIOR, BeliefUpdate::Overwrite)
    }

    pub fn with_update(w: usize, h: usize, prior: f64, update: BeliefUpdate) -> Self {
        AllocentricMap {
            w,
            h,
            belief: vec![prior; w * h],
            seen: vec![false; w * h],
            prior,
            update,
        }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.belief[y * self.w + x]
    }

    pub fn seen_at(&self, x: usize, y: usize) -> bool {
        self.seen[y * self.w + x]
    }
}

/// How many times the agent has occupied each cell.
#[derive(Clone, Debug)]
pub struct VisitMap {
    pub w: usize,
    pub h: usize,
    pub counts: Vec<u32>,
}

impl VisitMap {
    pub fn new(w: usize, h: usize) -> Self {
        VisitMap {
            w,
            h,
            counts: vec![0; w * h],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> u32 {
        self.counts[y * self.w + x]
    }

    pub fn visited(&self, x: usize, y: usize) -> bool {
        self.at(x, y) > 0
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Turns a raw visit count into the network-facing visit value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VisitScale {
    /// `min(count, c) / c`: more visits push the value toward 1.
    Scaled(u32),
    /// 1 if visited at all, else 0.
    Binary,
}

impl Default for VisitScale {
    fn default() -> Self {
        VisitScale::Scaled(5)
    }
}

impl VisitScale {
    pub fn value(self, count: u32) -> f64 {
        match self {
            VisitScale::Scaled(c) => (count.min(c) as f64) / c as f64,
            VisitScale::Binary => {
                if count > 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Egocentric belief window: 25×25 cells centered on the anchor pose,
/// −1 where unseen or out of bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct EgocentricMap {
    pub values: Vec<f64>,
    pub anchor: AgentPose,
}

impl EgocentricMap {
    /// Map coordinates of window cell (col, row), if in bounds.
    pub fn cell_at(&self, col: usize, row: usize, w: usize, h: usize) -> Option<AgentPose> {
        let x = self.anchor.x as isize + col as isize - EGO_HALF as isize;
        let y = self.anchor.y as isize + row as isize - EGO_HALF as isize;
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            Some(AgentPose::new(x as usize, y as usize))
        } else {
            None
        }
    }
}

/// One tile of the region grid; bounds are half-open.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub centroid: AgentPose,
}

impl Region {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: AgentPose) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }
}

/// Ceil-division tiling of the map into near-square regions, row-major
/// (index = row·cols + col). Edge regions may be smaller.
#[derive(Clone, Debug)]
pub struct RegionGrid {
    pub w: usize,
    pub h: usize,
    pub side: usize,
    pub cols: usize,
    pub rows: usize,
    pub regions: Vec<Region>,
}

impl RegionGrid {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Index of the region containing `pose`.
    pub fn region_of(&self, pose: AgentPose) -> usize {
        let col = pose.x / self.side;
        let row = pose.y / self.side;
        row * self.cols + col
    }
}

/// Builds the region grid. `region_side` must be positive and no larger
/// than the smaller map dimension.
pub fn segment_regions(w: usize, h: usize, region_side: usize) -> Result<RegionGrid> {
    if region_side == 0 || region_side > w.min(h) {
        return Err(Error::config(format!(
            "region side {region_side} must lie in 1..={}",
            w.min(h)
        )));
    }
    let cols = w.div_ceil(region_side);
    let rows = h.div_ceil(region_side);
    let mut regions = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let x0 = col * region_side;
            let y0 = row * region_side;
            let x1 = (x0 + region_side).min(w);
            let y1 = (y0 + region_side).min(h);
            regions.push(Region {
                x0,
                y0,
                x1,
                y1,
                centroid: AgentPose::new((x0 + x1) / 2, (y0 + y1) / 2),
            });
        }
    }
    Ok(RegionGrid {
        w,
        h,
        side: region_side,
        cols,
        rows,
        regions,
    })
}

/// Folds one observation into the belief/visit maps: every in-bounds,
/// non-sentinel window cell gets the observed value (per the map's update
/// rule) and is marked seen; the pose's visit count increments by one.
pub fn integrate_observation(
    m: &mut AllocentricMap,
    v: &mut VisitMap,
    obs: &Observation,
    pose: AgentPose,
) {
    let half = (OBS_SIDE / 2) as isize;
    for row in 0..OBS_SIDE {
        for col in 0..OBS_SIDE {
            let val = obs.values[row * OBS_SIDE + col];
            if val == SENTINEL {
                continue;
            }
            let x = pose.x as isize + col as isize - half;
            let y = pose.y as isize + row as isize - half;
            if x < 0 || y < 0 || x as usize >= m.w || y as usize >= m.h {
                continue;
            }
            let idx = y as usize * m.w + x as usize;
            m.belief[idx] = match m.update {
                BeliefUpdate::Overwrite => val,
                BeliefUpdate::Ema(rate) => {
                    if m.seen[idx] {
                        (1.0 - rate) * m.belief[idx] + rate * val
                    } else {
                        val
                    }
                }
            };
            m.seen[idx] = true;
        }
    }
    v.counts[pose.y * v.w + pose.x] += 1;
}

/// Reads the 25×25 egocentric belief window at `pose`: belief where seen,
/// −1 where unseen or out of bounds. Pure function of `(m, pose)`.
pub fn extract_egocentric(m: &AllocentricMap, pose: AgentPose) -> EgocentricMap {
    let mut values = vec![SENTINEL; EGO_AREA];
    let half = EGO_HALF as isize;
    for row in 0..EGO_SIDE {
        for col in 0..EGO_SIDE {
            let x = pose.x as isize + col as isize - half;
            let y = pose.y as isize + row as isize - half;
            if x < 0 || y < 0 || x as usize >= m.w || y as usize >= m.h {
                continue;
            }
            let idx = y as usize * m.w + x as usize;
            if m.seen[idx] {
                values[row * EGO_SIDE + col] = m.belief[idx];
            }
        }
    }
    EgocentricMap {
        values,
        anchor: pose,
    }
}

/// Visit values of the four neighbors in the order left, right, top,
/// bottom. Out-of-bounds neighbors report 1.0 ("do not go").
pub fn visited_adjacency(v: &VisitMap, pose: AgentPose, scale: VisitScale) -> [f64; 4] {
    let neighbor = |dx: isize, dy: isize| -> f64 {
        let x = pose.x as isize + dx;
        let y = pose.y as isize + dy;
        if x < 0 || y < 0 || x as usize >= v.w || y as usize >= v.h {
            1.0
        } else {
            scale.value(v.at(x as usize, y as usize))
        }
    };
    [
        neighbor(-1, 0),
        neighbor(1, 0),
        neighbor(0, -1),
        neighbor(0, 1),
    ]
}

/// Per-region statistics for target selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionStats {
    /// Fraction of the region's cells the agent has occupied.
    pub alpha: f64,
    /// Mean belief over the region (prior where unseen).
    pub beta: f64,
    /// Euclidean distance from `pose` to the region centroid, divided by
    /// the map diagonal (so it lies in [0,1]).
    pub zeta: f64,
}

/// Computes (α, β, ζ) for region `i`.
pub fn region_stats(
    m: &AllocentricMap,
    v: &VisitMap,
    grid: &RegionGrid,
    pose: AgentPose,
    i: usize,
) -> RegionStats {
    let r = &grid.regions[i];
    let mut visited = 0usize;
    let mut belief_sum = 0.0;
    for y in r.y0..r.y1 {
        for x in r.x0..r.x1 {
            if v.visited(x, y) {
                visited += 1;
            }
            belief_sum += if m.seen_at(x, y) { m.at(x, y) } else { m.prior };
        }
    }
    let area = r.area() as f64;
    let dx = pose.x as f64 - r.centroid.x as f64;
    let dy = pose.y as f64 - r.centroid.y as f64;
    let diag = ((grid.w * grid.w + grid.h * grid.h) as f64).sqrt();
    RegionStats {
        alpha: visited as f64 / area,
        beta: belief_sum / area,
        zeta: (dx * dx + dy * dy).sqrt() / diag,
    }
}

/// Total belief mass over seen cells — the AoI the agent has discovered
/// so far. With the overwrite update rule this is monotone nondecreasing
/// over an episode, since seen cells keep their value and new cells only
/// add nonnegative mass.
pub fn discovered_mass(m: &AllocentricMap) -> f64 {
    m.belief
        .iter()
        .zip(&m.seen)
        .filter(|&(_, &s)| s)
        .map(|(&b, _)| b)
        .sum()
}

/// Writes the belief map in AOIMAP v1 (for debugging/rendering).
pub fn save_belief(path: &std::path::Path, m: &AllocentricMap) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "AOIMAP v1 {} {}", m.w, m.h);
    for y in 0..m.h {
        let row: Vec<String> = (0..m.w).map(|x| format!("{:.6}", m.at(x, y))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the visit map in AOIMAP v1 with integer counts.
pub fn save_visits(path: &std::path::Path, v: &VisitMap) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "AOIMAP v1 {} {}", v.w, v.h);
    for y in 0..v.h {
        let row: Vec<String> = (0..v.w).map(|x| format!("{}", v.at(x, y))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    std::fs::write(path, out)?;
    Ok(())
}
