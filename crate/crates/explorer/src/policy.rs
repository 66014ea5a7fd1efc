//! Decision glue between the maps and the networks: region-level target
//! selection, local-target projection into the egocentric window, state
//! vector assembly, rewards, and the two phase-termination predicates.

use crate::env::{AgentPose, Observation, OBS_AREA};
use crate::error::{Error, Result};
use crate::mapping::{
    region_stats, AllocentricMap, RegionGrid, RegionStats, VisitMap, VisitScale, EGO_HALF,
};

/// Length of the navigation state vector: 25 observation values,
/// 4 visited-adjacency values, 2 normalized displacement components.
pub const NAV_STATE_LEN: usize = OBS_AREA + 4 + 2;
/// Length of the exploration state vector: 25 observation values,
/// 4 visited-adjacency values.
pub const EXPL_STATE_LEN: usize = OBS_AREA + 4;

/// Step cap for one navigation phase.
pub const DEFAULT_NAV_CAP: usize = 500;
/// Step cap for one exploration phase.
pub const DEFAULT_EXPL_CAP: usize = 300;
/// Floor (in belief mass, ~one fully-certain cell) for the relative
/// stagnation test, so a near-empty map cannot make 5% of nothing.
pub const DEFAULT_MASS_FLOOR: f64 = 1.0;

/// Weights of the linear region-scoring objective. The sign convention is
/// part of the contract: coverage and distance count against a region,
/// AoI potential counts for it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveWeights {
    /// Coverage weight (≤ 0): already-covered regions score lower.
    pub w_alpha: f64,
    /// AoI-potential weight (≥ 0): promising regions score higher.
    pub w_beta: f64,
    /// Distance weight (≤ 0): far regions score lower.
    pub w_zeta: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            w_alpha: -1.0,
            w_beta: 1.0,
            w_zeta: -0.3,
        }
    }
}

impl ObjectiveWeights {
    /// Enforces the sign convention; call when loading user-supplied weights.
    pub fn validated(self) -> Result<Self> {
        if self.w_alpha > 0.0 || self.w_beta < 0.0 || self.w_zeta > 0.0 {
            return Err(Error::config(format!(
                "objective weights must satisfy w_alpha <= 0, w_beta >= 0, w_zeta <= 0 \
                 (got {}, {}, {})",
                self.w_alpha, self.w_beta, self.w_zeta
            )));
        }
        Ok(self)
    }

    /// The region score ω₁α + ω₂β + ω₃ζ.
    pub fn score(&self, s: RegionStats) -> f64 {
        self.w_alpha * s.alpha + self.w_beta * s.beta + self.w_zeta * s.zeta
    }
}

/// A chosen region with its global target (region centroid) and the local
/// target inside the agent's current egocentric window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TargetAssignment {
    pub region: usize,
    /// Global target: centroid of the selected region.
    pub t: AgentPose,
    /// Local target: window cell closest to `t`; equals `t` when `t` is
    /// inside the window.
    pub t_l: AgentPose,
}

/// Picks the region maximizing the linear objective (ties → lowest index)
/// over per-region stats.
pub fn select_from_stats(stats: &[RegionStats], w: &ObjectiveWeights) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &s) in stats.iter().enumerate() {
        let score = w.score(s);
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Scores every region from the current maps and returns the winning
/// assignment. The agent's own region is eligible (choosing it means
/// "keep exploring here").
pub fn select_target(
    grid: &RegionGrid,
    m: &AllocentricMap,
    v: &VisitMap,
    pose: AgentPose,
    w: &ObjectiveWeights,
) -> TargetAssignment {
    let stats: Vec<RegionStats> = (0..grid.len())
        .map(|i| region_stats(m, v, grid, pose, i))
        .collect();
    let region = select_from_stats(&stats, w);
    let t = grid.regions[region].centroid;
    TargetAssignment {
        region,
        t,
        t_l: select_local_target(t, pose, grid.w, grid.h),
    }
}

/// Projects the global target into the agent's 25×25 window: `t` itself
/// when inside, otherwise the in-bounds window cell minimizing Euclidean
/// distance to `t` (ties → smaller y, then smaller x).
pub fn select_local_target(t: AgentPose, pose: AgentPose, w: usize, h: usize) -> AgentPose {
    let half = EGO_HALF as isize;
    if t.x.abs_diff(pose.x) <= EGO_HALF && t.y.abs_diff(pose.y) <= EGO_HALF {
        return t;
    }
    let mut best = pose;
    let mut best_d2 = i64::MAX;
    for dy in -half..=half {
        for dx in -half..=half {
            let x = pose.x as isize + dx;
            let y = pose.y as isize + dy;
            if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
                continue;
            }
            let ex = x - t.x as isize;
            let ey = y - t.y as isize;
            let d2 = (ex * ex + ey * ey) as i64;
            if d2 < best_d2 {
                best_d2 = d2;
                best = AgentPose::new(x as usize, y as usize);
            }
        }
    }
    best
}

/// Assembles the 31-entry navigation state: observation window, visit
/// adjacency, then the displacement to the local target, each component
/// divided by the window half-width so it lies in about [−1, 1].
pub fn nav_state(obs: &Observation, adjacency: &[f64; 4], pose: AgentPose, t_l: AgentPose) -> Vec<f64> {
    let mut s = Vec::with_capacity(NAV_STATE_LEN);
    s.extend_from_slice(&obs.values);
    s.extend_from_slice(adjacency);
    s.push((t_l.x as f64 - pose.x as f64) / EGO_HALF as f64);
    s.push((t_l.y as f64 - pose.y as f64) / EGO_HALF as f64);
    s
}

/// Assembles the 29-entry exploration state: observation window plus
/// visit adjacency.
pub fn expl_state(obs: &Observation, adjacency: &[f64; 4]) -> Vec<f64> {
    let mut s = Vec::with_capacity(EXPL_STATE_LEN);
    s.extend_from_slice(&obs.values);
    s.extend_from_slice(adjacency);
    s
}

/// Reward shaping constants. All bonuses are magnitudes (nonnegative);
/// `step_cost` is added verbatim each step, so a movement penalty is
/// expressed as a negative value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardConfig {
    /// Bonus for first arrival at a believed-AoI cell.
    pub r_aoi: f64,
    /// Penalty scale for stepping on an already-visited cell.
    pub r_visited: f64,
    /// Bonus for reaching the local target.
    pub r_reach_tl: f64,
    /// Bonus for reaching the global target (supersedes the local bonus).
    pub r_reach_t: f64,
    /// Belief threshold above which a cell counts as AoI.
    pub eps_aoi: f64,
    /// Flat additive term applied every step.
    pub step_cost: f64,
    /// How visit counts map to penalty scale.
    pub visit_scale: VisitScale,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            r_aoi: 1.0,
            r_visited: 0.25,
            r_reach_tl: 10.0,
            r_reach_t: 50.0,
            eps_aoi: 0.5,
            step_cost: 0.0,
            visit_scale: VisitScale::default(),
        }
    }
}

impl RewardConfig {
    pub fn validated(self) -> Result<Self> {
        if self.r_aoi < 0.0 || self.r_visited < 0.0 || self.r_reach_tl < 0.0 || self.r_reach_t < 0.0
        {
            return Err(Error::config("reward magnitudes must be nonnegative"));
        }
        if !(self.eps_aoi > 0.0 && self.eps_aoi < 1.0) {
            return Err(Error::config(format!(
                "eps_aoi must lie strictly inside (0,1), got {}",
                self.eps_aoi
            )));
        }
        if !self.step_cost.is_finite() {
            return Err(Error::config("step_cost must be finite"));
        }
        Ok(self)
    }
}

/// Shared AoI/visit portion of both rewards, evaluated against the maps
/// as they were *before* the arrival at `x` is integrated: a bonus for
/// first-visiting a believed-AoI cell, a scaled penalty for revisiting.
fn base_reward(x: AgentPose, m: &AllocentricMap, v: &VisitMap, cfg: &RewardConfig) -> f64 {
    let mut r = cfg.step_cost;
    let count = v.at(x.x, x.y);
    if count > 0 {
        r -= cfg.r_visited * cfg.visit_scale.value(count);
    } else if m.at(x.x, x.y) > cfg.eps_aoi {
        r += cfg.r_aoi;
    }
    r
}

/// Navigation reward at the just-arrived cell `x`: the base AoI/visit
/// terms plus the target bonus — full bonus at the global target, the
/// smaller one at the local target otherwise.
pub fn reward_navigation(
    x: AgentPose,
    m: &AllocentricMap,
    v: &VisitMap,
    cfg: &RewardConfig,
    t_l: AgentPose,
    t: AgentPose,
) -> f64 {
    let mut r = base_reward(x, m, v, cfg);
    if x == t {
        r += cfg.r_reach_t;
    } else if x == t_l {
        r += cfg.r_reach_tl;
    }
    r
}

/// Exploration reward: identical to navigation minus the target bonuses.
pub fn reward_exploration(x: AgentPose, m: &AllocentricMap, v: &VisitMap, cfg: &RewardConfig) -> f64 {
    base_reward(x, m, v, cfg)
}

/// A navigation phase ends on arrival at the global target or at the
/// step cap.
pub fn navigation_done(pose: AgentPose, t: AgentPose, steps_in_phase: usize, cap: usize) -> bool {
    pose == t || steps_in_phase >= cap
}

/// An exploration phase ends at the step cap, or once discovery
/// stagnates: after at least 100 steps, when the discovered-mass gain
/// over the last 100 steps is below 5% of the mass 100 steps ago (with
/// `mass_floor` preventing a vacuous 5%-of-zero test).
///
/// `history` holds the cumulative discovered-AoI mass per step, so its
/// length is `steps_in_phase + 1`.
pub fn exploration_done(
    history: &[f64],
    steps_in_phase: usize,
    cap: usize,
    mass_floor: f64,
) -> bool {
    if steps_in_phase >= cap {
        return true;
    }
    if steps_in_phase < 100 || history.len() <= 100 {
        return false;
    }
    let now = *history.last().expect("nonempty history");
    let ago = history[history.len() - 1 - 100];
    (now - ago) < 0.05 * ago.max(mass_floor)
}
