//! The hidden world: ground-truth area-of-interest (AoI) probability field,
//! procedural scenario generation, agent kinematics, and the 5×5 local
//! observation model.

use crate::error::{Error, Result};
use crate::rng::Rng;
use std::fmt::Write as _;
use std::path::Path;

/// Side length of the square observation window.
pub const OBS_SIDE: usize = 5;
/// Cells in one observation (5×5).
pub const OBS_AREA: usize = OBS_SIDE * OBS_SIDE;
/// Sentinel for "no data" (out of bounds / never seen), distinct from a
/// genuine zero probability.
pub const SENTINEL: f64 = -1.0;

/// Immutable ground truth: per-cell AoI probability plus an optional victim
/// cell for search-and-rescue scenarios.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthMap {
    pub w: usize,
    pub h: usize,
    /// Row-major `[y][x]` probabilities in [0,1].
    pub aoi: Vec<f64>,
    pub victim: Option<(usize, usize)>,
}

impl GroundTruthMap {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.aoi[y * self.w + x]
    }

    /// Total AoI probability mass (Σ over all cells).
    pub fn total_mass(&self) -> f64 {
        self.aoi.iter().sum()
    }

    fn validate(&self) -> Result<()> {
        if self.w < OBS_SIDE || self.h < OBS_SIDE {
            return Err(Error::config(format!(
                "map {}×{} smaller than the {}-cell observation side",
                self.w, self.h, OBS_SIDE
            )));
        }
        if self.aoi.len() != self.w * self.h {
            return Err(Error::config("map cell count does not match dimensions"));
        }
        if !self.aoi.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::config("map probabilities must lie in [0,1]"));
        }
        if let Some((x, y)) = self.victim {
            if x >= self.w || y >= self.h {
                return Err(Error::config("victim cell out of bounds"));
            }
        }
        Ok(())
    }
}

/// What kind of scenario to generate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Pure AoI probability field.
    AoiField,
    /// AoI field plus one victim cell with a small AoI halo around it.
    SarVictim,
}

/// Everything that determines a generated map. The seed fully pins the
/// result.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub w: usize,
    pub h: usize,
    pub blob_count: usize,
    /// Target fraction of total probability mass: Σ aoi ≈ density·W·H.
    pub density: f64,
    /// Gaussian σ of a blob, in cells.
    pub size: f64,
    /// 0 = circular blobs; larger values allow more eccentric, rotated ones.
    pub shape: f64,
    /// Per-cell probability of salt-and-pepper noise (cell forced to 0 or 1).
    pub noise_rate: f64,
    pub kind: ScenarioKind,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            w: 180,
            h: 180,
            blob_count: 10,
            density: 0.15,
            size: 12.0,
            shape: 0.5,
            noise_rate: 0.0,
            kind: ScenarioKind::AoiField,
            seed: 0,
        }
    }
}

/// Builds the ground-truth map for a spec.
///
/// Blob centers are uniform over the map; each blob is an anisotropic 2D
/// Gaussian bump (σx·σy = σ², aspect and rotation drawn from the shape
/// parameter). The summed field is rescaled so its mass matches
/// `density·W·H`, then clamped to [0,1]; salt-and-pepper noise and the
/// victim halo are applied afterwards.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<GroundTruthMap> {
    if spec.w == 0 || spec.h == 0 {
        return Err(Error::config("scenario map must have positive area"));
    }
    if spec.w < OBS_SIDE || spec.h < OBS_SIDE {
        return Err(Error::config(format!(
            "scenario map {}×{} smaller than the {}-cell observation side",
            spec.w, spec.h, OBS_SIDE
        )));
    }
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(Error::config("density must lie in [0,1]"));
    }
    if !(0.0..=1.0).contains(&spec.noise_rate) {
        return Err(Error::config("noise rate must lie in [0,1]"));
    }
    if spec.size <= 0.0 {
        return Err(Error::config("blob size must be positive"));
    }

    let mut rng = Rng::new(spec.seed);
    let (w, h) = (spec.w, spec.h);
    let mut field = vec![0.0f64; w * h];

    for _ in 0..spec.blob_count {
        let cx = rng.uniform(0.0, w as f64);
        let cy = rng.uniform(0.0, h as f64);
        // Aspect in [1/(1+2·shape), 1+2·shape], log-uniform so stretching and
        // squeezing are symmetric; rotation uniform.
        let stretch = 1.0 + 2.0 * spec.shape.max(0.0);
        let aspect = stretch.powf(rng.uniform(-1.0, 1.0));
        let theta = rng.uniform(0.0, std::f64::consts::PI);
        let sx = spec.size * aspect.sqrt();
        let sy = spec.size / aspect.sqrt();
        let (sin_t, cos_t) = theta.sin_cos();

        // Beyond 4σ the bump is negligible; restrict the evaluation box.
        let reach = 4.0 * sx.max(sy);
        let x0 = ((cx - reach).floor().max(0.0)) as usize;
        let x1 = ((cx + reach).ceil() as usize).min(w - 1);
        let y0 = ((cy - reach).floor().max(0.0)) as usize;
        let y1 = ((cy + reach).ceil() as usize).min(h - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = (x as f64 + 0.5) - cx;
                let dy = (y as f64 + 0.5) - cy;
                let u = dx * cos_t + dy * sin_t;
                let v = -dx * sin_t + dy * cos_t;
                field[y * w + x] +=
                    (-(u * u / (2.0 * sx * sx) + v * v / (2.0 * sy * sy))).exp();
            }
        }
    }

    // Rescale so the configured density is the actual mass fraction, then
    // clamp (saturation at 1 can shave a little off dense overlaps).
    let sum: f64 = field.iter().sum();
    if sum > 0.0 {
        let scale = spec.density * (w * h) as f64 / sum;
        for v in &mut field {
            *v = (*v * scale).min(1.0);
        }
    }

    if spec.noise_rate > 0.0 {
        for v in &mut field {
            if rng.chance(spec.noise_rate) {
                *v = if rng.chance(0.5) { 1.0 } else { 0.0 };
            }
        }
    }

    let victim = match spec.kind {
        ScenarioKind::AoiField => None,
        ScenarioKind::SarVictim => {
            let vx = rng.index_below(w);
            let vy = rng.index_below(h);
            // Small halo so AoI-seeking behavior is drawn toward the victim:
            // 1.0 at the cell, fading linearly to 0.4 at distance 2.
            for y in vy.saturating_sub(2)..=(vy + 2).min(h - 1) {
                for x in vx.saturating_sub(2)..=(vx + 2).min(w - 1) {
                    let d = (((x as f64 - vx as f64).powi(2)
                        + (y as f64 - vy as f64).powi(2)) as f64)
                        .sqrt();
                    if d <= 2.0 {
                        let halo = 1.0 - 0.3 * d;
                        let cell = &mut field[y * w + x];
                        *cell = cell.max(halo);
                    }
                }
            }
            Some((vx, vy))
        }
    };

    let map = GroundTruthMap {
        w,
        h,
        aoi: field,
        victim,
    };
    map.validate()?;
    Ok(map)
}

/// Agent cell position; origin top-left, x grows right, y grows down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AgentPose {
    pub x: usize,
    pub y: usize,
}

impl AgentPose {
    pub fn new(x: usize, y: usize) -> Self {
        AgentPose { x, y }
    }

    /// Component-wise Manhattan distance.
    pub fn manhattan(&self, other: AgentPose) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// The five primitive actions. `Forward` decreases y (toward the top of the
/// map); `Backward` increases it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Forward,
    Backward,
    Left,
    Right,
    Hover,
}

/// Fixed action order used for network outputs and indices everywhere.
pub const ACTIONS: [Action; 5] = [
    Action::Forward,
    Action::Backward,
    Action::Left,
    Action::Right,
    Action::Hover,
];

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Forward => 0,
            Action::Backward => 1,
            Action::Left => 2,
            Action::Right => 3,
            Action::Hover => 4,
        }
    }

    pub fn from_index(i: usize) -> Action {
        ACTIONS[i]
    }
}

/// Applies an action with boundary clamping: a move that would leave the map
/// leaves the coordinate unchanged on that axis.
pub fn step(map: &GroundTruthMap, pose: AgentPose, a: Action) -> AgentPose {
    debug_assert!(pose.x < map.w && pose.y < map.h, "pose out of bounds");
    let (mut x, mut y) = (pose.x, pose.y);
    match a {
        Action::Forward => y = y.saturating_sub(1),
        Action::Backward => {
            if y + 1 < map.h {
                y += 1;
            }
        }
        Action::Left => x = x.saturating_sub(1),
        Action::Right => {
            if x + 1 < map.w {
                x += 1;
            }
        }
        Action::Hover => {}
    }
    AgentPose { x, y }
}

/// A 5×5 window of ground truth centered on the agent; −1 marks cells
/// outside the map.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// Row-major, rows top to bottom relative to the agent.
    pub values: [f64; OBS_AREA],
}

/// Reads the 5×5 ground-truth window at `pose`.
pub fn observe(map: &GroundTruthMap, pose: AgentPose) -> Observation {
    let mut values = [SENTINEL; OBS_AREA];
    let half = (OBS_SIDE / 2) as isize;
    for dy in -half..=half {
        for dx in -half..=half {
            let x = pose.x as isize + dx;
            let y = pose.y as isize + dy;
            if x >= 0 && y >= 0 && (x as usize) < map.w && (y as usize) < map.h {
                let idx = ((dy + half) * OBS_SIDE as isize + (dx + half)) as usize;
                values[idx] = map.at(x as usize, y as usize);
            }
        }
    }
    Observation { values }
}

/// Writes a map in the AOIMAP v1 text format.
pub fn save_map(path: &Path, map: &GroundTruthMap) -> Result<()> {
    let mut out = String::new();
    match map.victim {
        Some((x, y)) => {
            let _ = writeln!(out, "AOIMAP v1 {} {} victim {} {}", map.w, map.h, x, y);
        }
        None => {
            let _ = writeln!(out, "AOIMAP v1 {} {}", map.w, map.h);
        }
    }
    for y in 0..map.h {
        let row: Vec<String> = (0..map.w).map(|x| format!("{:.6}", map.at(x, y))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parses an AOIMAP v1 file, validating dimensions, value range, and the
/// victim cell.
pub fn load_map(path: &Path) -> Result<GroundTruthMap> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::format(format!("cannot read map {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(format!("{}: empty map file", path.display())))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() < 4 || parts[0] != "AOIMAP" || parts[1] != "v1" {
        return Err(Error::format(format!(
            "{}: bad header {header:?}, expected \"AOIMAP v1 <W> <H> [victim <x> <y>]\"",
            path.display()
        )));
    }
    let w: usize = parts[2]
        .parse()
        .map_err(|_| Error::format(format!("{}: bad width {:?}", path.display(), parts[2])))?;
    let h: usize = parts[3]
        .parse()
        .map_err(|_| Error::format(format!("{}: bad height {:?}", path.display(), parts[3])))?;
    let victim = match parts.len() {
        4 => None,
        7 if parts[4] == "victim" => {
            let x: usize = parts[5].parse().map_err(|_| {
                Error::format(format!("{}: bad victim x {:?}", path.display(), parts[5]))
            })?;
            let y: usize = parts[6].parse().map_err(|_| {
                Error::format(format!("{}: bad victim y {:?}", path.display(), parts[6]))
            })?;
            Some((x, y))
        }
        _ => {
            return Err(Error::format(format!(
                "{}: bad header {header:?}",
                path.display()
            )))
        }
    };

    let mut aoi = Vec::with_capacity(w * h);
    for y in 0..h {
        let line = lines.next().ok_or_else(|| {
            Error::format(format!("{}: missing row {y} of {h}", path.display()))
        })?;
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != w {
            return Err(Error::format(format!(
                "{}: row {y} has {} values, expected {w}",
                path.display(),
                row.len()
            )));
        }
        for (x, tok) in row.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| {
                Error::format(format!(
                    "{}: bad value {tok:?} at ({x},{y})",
                    path.display()
                ))
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::format(format!(
                    "{}: value {v} at ({x},{y}) outside [0,1]",
                    path.display()
                )));
            }
            aoi.push(v);
        }
    }

    let map = GroundTruthMap { w, h, aoi, victim };
    map.validate()?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_map(w: usize, h: usize, v: f64) -> GroundTruthMap {
        GroundTruthMap {
            w,
            h,
            aoi: vec![v; w * h],
            victim: None,
        }
    }

    #[test]
    fn zero_blobs_give_zero_map() {
        let spec = ScenarioSpec {
            blob_count: 0,
            noise_rate: 0.0,
            ..Default::default()
        };
        let map = generate_scenario(&spec).unwrap();
        assert!(map.aoi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = ScenarioSpec {
            seed: 77,
            noise_rate: 0.02,
            kind: ScenarioKind::SarVictim,
            ..Default::default()
        };
        let a = generate_scenario(&spec).unwrap();
        let b = generate_scenario(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mass_fraction_tracks_density_over_seeds() {
        // Paper-scale maps: the realized mass fraction must stay within
        // ±20% (relative) of the configured density on every seed.
        let density = 0.15;
        for seed in 0..35 {
            let spec = ScenarioSpec {
                seed,
                density,
                ..Default::default()
            };
            let map = generate_scenario(&spec).unwrap();
            let frac = map.total_mass() / (map.w * map.h) as f64;
            assert!(
                (frac - density).abs() <= 0.2 * density,
                "seed {seed}: mass fraction {frac:.4} vs density {density}"
            );
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let zero = ScenarioSpec {
            w: 0,
            h: 0,
            ..Default::default()
        };
        assert!(generate_scenario(&zero).is_err());
        let tiny = ScenarioSpec {
            w: 4,
            h: 20,
            ..Default::default()
        };
        assert!(generate_scenario(&tiny).is_err());
    }

    #[test]
    fn victim_has_full_probability_and_bounds() {
        let spec = ScenarioSpec {
            kind: ScenarioKind::SarVictim,
            seed: 5,
            ..Default::default()
        };
        let map = generate_scenario(&spec).unwrap();
        let (vx, vy) = map.victim.unwrap();
        assert!(vx < map.w && vy < map.h);
        assert_eq!(map.at(vx, vy), 1.0);
    }

    #[test]
    fn step_moves_and_clamps() {
        let map = uniform_map(10, 10, 0.0);
        assert_eq!(
            step(&map, AgentPose::new(0, 0), Action::Left),
            AgentPose::new(0, 0)
        );
        assert_eq!(
            step(&map, AgentPose::new(3, 4), Action::Hover),
            AgentPose::new(3, 4)
        );
        assert_eq!(
            step(&map, AgentPose::new(3, 4), Action::Forward),
            AgentPose::new(3, 3)
        );
        assert_eq!(
            step(&map, AgentPose::new(3, 4), Action::Backward),
            AgentPose::new(3, 5)
        );
        assert_eq!(
            step(&map, AgentPose::new(9, 9), Action::Right),
            AgentPose::new(9, 9)
        );
    }

    #[test]
    fn step_never_leaves_bounds() {
        let map = uniform_map(6, 7, 0.0);
        for y in 0..map.h {
            for x in 0..map.w {
                for a in ACTIONS {
                    let p = step(&map, AgentPose::new(x, y), a);
                    assert!(p.x < map.w && p.y < map.h, "({x},{y}) {a:?} -> {p:?}");
                }
            }
        }
    }

    #[test]
    fn observe_uniform_center() {
        let map = uniform_map(11, 11, 0.3);
        let obs = observe(&map, AgentPose::new(5, 5));
        assert!(obs.values.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn observe_corner_sentinels() {
        let map = uniform_map(11, 11, 0.3);
        let obs = observe(&map, AgentPose::new(0, 0));
        for row in 0..OBS_SIDE {
            for col in 0..OBS_SIDE {
                let v = obs.values[row * OBS_SIDE + col];
                if row < 2 || col < 2 {
                    assert_eq!(v, SENTINEL, "row {row} col {col}");
                } else {
                    assert_eq!(v, 0.3, "row {row} col {col}");
                }
            }
        }
    }

    #[test]
    fn observe_matches_brute_force_oracle() {
        // Independent index mapping written as a plain double loop.
        let spec = ScenarioSpec {
            seed: 9,
            w: 30,
            h: 20,
            ..Default::default()
        };
        let map = generate_scenario(&spec).unwrap();
        let mut rng = Rng::new(4);
        for _ in 0..50 {
            let pose = AgentPose::new(rng.index_below(map.w), rng.index_below(map.h));
            let obs = observe(&map, pose);
            for row in 0..OBS_SIDE {
                for col in 0..OBS_SIDE {
                    let gx = pose.x as isize - 2 + col as isize;
                    let gy = pose.y as isize - 2 + row as isize;
                    let expected = if gx < 0
                        || gy < 0
                        || gx >= map.w as isize
                        || gy >= map.h as isize
                    {
                        SENTINEL
                    } else {
                        map.at(gx as usize, gy as usize)
                    };
                    assert_eq!(obs.values[row * OBS_SIDE + col], expected);
                }
            }
        }
    }

    #[test]
    fn observe_center_is_agent_cell() {
        let spec = ScenarioSpec {
            seed: 10,
            w: 25,
            h: 25,
            ..Default::default()
        };
        let map = generate_scenario(&spec).unwrap();
        for (x, y) in [(0, 0), (12, 7), (24, 24), (3, 20)] {
            let obs = observe(&map, AgentPose::new(x, y));
            assert_eq!(obs.values[OBS_AREA / 2], map.at(x, y));
        }
    }

    #[test]
    fn aoimap_round_trip() {
        let spec = ScenarioSpec {
            seed: 13,
            w: 20,
            h: 15,
            kind: ScenarioKind::SarVictim,
            ..Default::default()
        };
        let map = generate_scenario(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.aoimap");
        save_map(&path, &map).unwrap();
        let loaded = load_map(&path).unwrap();
        assert_eq!(loaded.w, map.w);
        assert_eq!(loaded.h, map.h);
        assert_eq!(loaded.victim, map.victim);
        for (a, b) in map.aoi.iter().zip(&loaded.aoi) {
            assert!((a - b).abs() < 1e-6);
        }
        // Saving the loaded map reproduces the file byte-for-byte.
        let path2 = dir.path().join("m2.aoimap");
        save_map(&path2, &loaded).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn malformed_map_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("bad header", "NOTAMAP v1 5 5\n"),
            ("missing rows", "AOIMAP v1 5 5\n0 0 0 0 0\n"),
            ("short row", "AOIMAP v1 5 5\n0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n"),
            (
                "range",
                "AOIMAP v1 5 5\n0 0 0 0 2.0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n",
            ),
            (
                "victim oob",
                "AOIMAP v1 5 5 victim 9 9\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n",
            ),
        ];
        for (name, text) in cases {
            let p = dir.path().join(format!("{}.aoimap", name.replace(' ', "_")));
            std::fs::write(&p, text).unwrap();
            assert!(load_map(&p).is_err(), "{name} should be rejected");
        }
    }
}
