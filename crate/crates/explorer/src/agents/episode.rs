//! The cyclic mission loop: select a region target, navigate to it,
//! explore around it, repeat until the step budget runs out. The same
//! phase runners serve staged training, joint fine-tuning, and frozen
//! evaluation.

use super::a2c::{A2cAgent, Rollout, RolloutStep};
use super::ddqn::DdqnAgent;
use super::history::HistoryWindow;
use super::replay::Transition;
use super::{Ablation, TrainConfig};
use crate::env::{observe, step as env_step, Action, AgentPose, GroundTruthMap};
use crate::error::Result;
use crate::mapping::{
    discovered_mass, extract_egocentric, integrate_observation, visited_adjacency, AllocentricMap,
    RegionGrid, VisitMap, DEFAULT_PRIOR, EGO_AREA, EGO_HALF,
};
use crate::policy::{
    exploration_done, nav_state, navigation_done, expl_state, reward_exploration,
    reward_navigation, select_local_target, select_target, EXPL_STATE_LEN, NAV_STATE_LEN,
};
use crate::rng::Rng;

/// Whether the learners adapt during the run or act frozen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// One per-action metrics row.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub x: usize,
    pub y: usize,
    /// Fraction of the map's AoI mass on visited cells.
    pub aoi_cov: f64,
    /// Fraction of all cells visited.
    pub total_cov: f64,
    pub reward: f64,
}

/// Everything a finished episode reports.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeMetrics {
    pub steps: Vec<StepRecord>,
    /// Step at which the victim cell first entered an observation
    /// window (0 = seen from the start pose), if ever.
    pub victim_found_step: Option<usize>,
    pub targets_selected: usize,
    /// Coverage at step 0, i.e. after the initial observation at the
    /// start pose but before any action.
    pub start_aoi_cov: f64,
    pub start_total_cov: f64,
    pub final_aoi_cov: f64,
    pub final_total_cov: f64,
    pub total_reward: f64,
}

/// Live episode state shared by the phase runners: ground truth, the
/// agent's maps, pose, step accounting, and incrementally-tracked
/// coverage.
pub struct EpisodeCtx<'a> {
    pub truth: &'a GroundTruthMap,
    pub cfg: &'a TrainConfig,
    pub m: AllocentricMap,
    pub v: VisitMap,
    pub pose: AgentPose,
    pub step: usize,
    pub budget: usize,
    pub records: Vec<StepRecord>,
    pub victim_found_step: Option<usize>,
    pub total_reward: f64,
    record_metrics: bool,
    visited_cells: usize,
    visited_aoi_mass: f64,
    total_mass: f64,
    start_aoi_cov: f64,
    start_total_cov: f64,
}

impl<'a> EpisodeCtx<'a> {
    /// Starts an episode at `start`: builds fresh maps, integrates the
    /// initial observation, and checks for the victim. With
    /// `record_metrics` off, per-step rows are skipped (used during
    /// training, where only rewards matter).
    pub fn new(
        truth: &'a GroundTruthMap,
        cfg: &'a TrainConfig,
        start: AgentPose,
        budget: usize,
        record_metrics: bool,
    ) -> Self {
        let m = AllocentricMap::with_update(truth.w, truth.h, DEFAULT_PRIOR, cfg.belief_update);
        let v = VisitMap::new(truth.w, truth.h);
        let mut ctx = EpisodeCtx {
            truth,
            cfg,
            m,
            v,
            pose: start,
            step: 0,
            budget,
            records: Vec::new(),
            victim_found_step: None,
            total_reward: 0.0,
            record_metrics,
            visited_cells: 0,
            visited_aoi_mass: 0.0,
            total_mass: truth.total_mass(),
            start_aoi_cov: 0.0,
            start_total_cov: 0.0,
        };
        ctx.mark_visit(start);
        integrate_observation(&mut ctx.m, &mut ctx.v, &observe(truth, start), start);
        ctx.check_victim();
        ctx.start_aoi_cov = ctx.aoi_cov();
        ctx.start_total_cov = ctx.total_cov();
        ctx
    }

    fn mark_visit(&mut self, p: AgentPose) {
        if !self.v.visited(p.x, p.y) {
            self.visited_cells += 1;
            self.visited_aoi_mass += self.truth.at(p.x, p.y);
        }
    }

    fn check_victim(&mut self) {
        if self.victim_found_step.is_none() {
            if let Some((vx, vy)) = self.truth.victim {
                if self.m.seen_at(vx, vy) {
                    self.victim_found_step = Some(self.step);
                }
            }
        }
    }

    /// Fraction of AoI mass on visited cells (1 when the map has none).
    pub fn aoi_cov(&self) -> f64 {
        if self.total_mass > 0.0 {
            self.visited_aoi_mass / self.total_mass
        } else {
            1.0
        }
    }

    /// Fraction of all cells visited.
    pub fn total_cov(&self) -> f64 {
        self.visited_cells as f64 / (self.truth.w * self.truth.h) as f64
    }

    /// Applies a move: updates the pose, integrates the arrival
    /// observation, advances the step counter, and records metrics.
    /// The reward must already have been computed against the
    /// pre-arrival maps.
    pub(crate) fn apply_move(&mut self, new_pose: AgentPose, reward: f64) {
        self.mark_visit(new_pose);
        self.pose = new_pose;
        integrate_observation(
            &mut self.m,
            &mut self.v,
            &observe(self.truth, new_pose),
            new_pose,
        );
        self.step += 1;
        self.check_victim();
        self.total_reward += reward;
        if self.record_metrics {
            self.records.push(StepRecord {
                step: self.step,
                x: new_pose.x,
                y: new_pose.y,
                aoi_cov: self.aoi_cov(),
                total_cov: self.total_cov(),
                reward,
            });
        }
    }

    /// Navigation state + map input at the current pose, with ablation
    /// zeroing applied.
    fn assemble_nav(&self, t_l: AgentPose) -> (Vec<f64>, Vec<f64>) {
        let obs = observe(self.truth, self.pose);
        let adj = self.adjacency();
        (nav_state(&obs, &adj, self.pose, t_l), self.map_input())
    }

    /// Exploration state + map input at the current pose.
    pub(crate) fn assemble_expl(&self) -> (Vec<f64>, Vec<f64>) {
        let obs = observe(self.truth, self.pose);
        let adj = self.adjacency();
        (expl_state(&obs, &adj), self.map_input())
    }

    fn adjacency(&self) -> [f64; 4] {
        if self.cfg.ablation == Ablation::NoVisit {
            [0.0; 4]
        } else {
            visited_adjacency(&self.v, self.pose, self.cfg.reward.visit_scale)
        }
    }

    fn map_input(&self) -> Vec<f64> {
        if self.cfg.ablation == Ablation::NoMap {
            vec![0.0; EGO_AREA]
        } else {
            extract_egocentric(&self.m, self.pose).values
        }
    }

    /// Seals the episode into its metrics.
    pub fn finish(self, targets_selected: usize) -> EpisodeMetrics {
        EpisodeMetrics {
            final_aoi_cov: self.aoi_cov(),
            final_total_cov: self.total_cov(),
            start_aoi_cov: self.start_aoi_cov,
            start_total_cov: self.start_total_cov,
            steps: self.records,
            victim_found_step: self.victim_found_step,
            targets_selected,
            total_reward: self.total_reward,
        }
    }
}

/// Runs one navigation phase toward global target `t`. The local target
/// is the window cell nearest `t`, held fixed until reached (a waypoint);
/// arriving at a waypoint, or `t` entering the window, re-anchors it. In
/// train mode every step is stored and the learner updates on its
/// configured cadence.
pub fn navigation_phase(
    ctx: &mut EpisodeCtx,
    nav: &mut DdqnAgent,
    t: AgentPose,
    mode: Mode,
    rng: &mut Rng,
) -> Result<()> {
    let train = mode == Mode::Train;
    let (w, h) = (ctx.truth.w, ctx.truth.h);
    let mut hist = HistoryWindow::new(NAV_STATE_LEN, EGO_AREA);
    let mut t_l = select_local_target(t, ctx.pose, w, h);
    let mut phase_steps = 0usize;
    let mut pending: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>, usize, f64, bool)> = None;

    loop {
        if t.x.abs_diff(ctx.pose.x) <= EGO_HALF && t.y.abs_diff(ctx.pose.y) <= EGO_HALF {
            t_l = t;
        }
        let (s, mp) = ctx.assemble_nav(t_l);
        hist.push(s, mp);
        let (hs, hm) = hist.snapshot();
        if let Some((ps, pm, pa, pr, pt)) = pending.take() {
            nav.buffer.push(Transition {
                states: ps,
                maps: pm,
                action: pa,
                reward: pr,
                next_states: hs.clone(),
                next_maps: hm.clone(),
                terminal: pt,
            });
        }
        if ctx.step >= ctx.budget || navigation_done(ctx.pose, t, phase_steps, ctx.cfg.nav_cap) {
            return Ok(());
        }

        let epsilon = if train { nav.eps.value() } else { 0.0 };
        let a = nav.act(&hs, &hm, epsilon, rng)?;
        let new_pose = env_step(ctx.truth, ctx.pose, Action::from_index(a));
        let r = reward_navigation(new_pose, &ctx.m, &ctx.v, &ctx.cfg.reward, t_l, t);
        ctx.apply_move(new_pose, r);
        phase_steps += 1;

        if train {
            pending = Some((hs, hm, a, r, ctx.pose == t));
            if ctx.step % ctx.cfg.update_every == 0 {
                nav.update(rng)?;
            }
        }
        if ctx.pose == t_l && t_l != t {
            t_l = select_local_target(t, ctx.pose, w, h);
        }
    }
}

/// Runs one exploration phase: act on the explorer's policy until the
/// step cap or discovery stagnation. In train mode the agent updates on
/// every full rollout (and on the partial one at the phase cut), always
/// bootstrapping — exploration is a continuing task.
pub fn exploration_phase(
    ctx: &mut EpisodeCtx,
    expl: &mut A2cAgent,
    mode: Mode,
    rng: &mut Rng,
) -> Result<()> {
    let train = mode == Mode::Train;
    let mut hist = HistoryWindow::new(EXPL_STATE_LEN, EGO_AREA);
    let mut phase_steps = 0usize;
    let mut mass_history = vec![discovered_mass(&ctx.m)];
    let mut rollout = Rollout::default();

    loop {
        let (s, mp) = ctx.assemble_expl();
        hist.push(s, mp);
        let (hs, hm) = hist.snapshot();
        let stop = ctx.step >= ctx.budget
            || exploration_done(&mass_history, phase_steps, ctx.cfg.expl_cap, ctx.cfg.mass_floor);
        if train && (stop || rollout.steps.len() >= ctx.cfg.rollout_len) && !rollout.steps.is_empty()
        {
            rollout.bootstrap = expl.value(&hs, &hm)?;
            expl.update(&rollout)?;
            rollout = Rollout::default();
        }
        if stop {
            return Ok(());
        }

        let a = expl.act(&hs, &hm, train, rng)?;
        let new_pose = env_step(ctx.truth, ctx.pose, Action::from_index(a));
        let r = reward_exploration(new_pose, &ctx.m, &ctx.v, &ctx.cfg.reward);
        ctx.apply_move(new_pose, r);
        phase_steps += 1;
        mass_history.push(discovered_mass(&ctx.m));
        if train {
            rollout.steps.push(RolloutStep {
                states: hs,
                maps: hm,
                action: a,
                reward: r,
            });
        }
    }
}

/// One full mission: cycle target selection → navigation → exploration
/// until the step budget is exhausted. A budget of zero yields empty
/// step records, with coverage reflecting only the initial observation.
#[allow(clippy::too_many_arguments)]
pub fn run_full_episode(
    truth: &GroundTruthMap,
    grid: &RegionGrid,
    nav: &mut DdqnAgent,
    expl: &mut A2cAgent,
    cfg: &TrainConfig,
    start: AgentPose,
    budget: usize,
    mode: Mode,
    rng: &mut Rng,
) -> Result<EpisodeMetrics> {
    let mut ctx = EpisodeCtx::new(truth, cfg, start, budget, true);
    let mut targets_selected = 0usize;
    while ctx.step < ctx.budget {
        let assignment = select_target(grid, &ctx.m, &ctx.v, ctx.pose, &cfg.weights);
        targets_selected += 1;
        navigation_phase(&mut ctx, nav, assignment.t, mode, rng)?;
        if ctx.step >= ctx.budget {
            break;
        }
        exploration_phase(&mut ctx, expl, mode, rng)?;
    }
    Ok(ctx.finish(targets_selected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_scenario, ScenarioKind, ScenarioSpec};
    use crate::mapping::segment_regions;

    fn small_truth(seed: u64, victim: bool) -> GroundTruthMap {
        generate_scenario(&ScenarioSpec {
            w: 20,
            h: 20,
            blob_count: 2,
            density: 0.15,
            size: 2.5,
            shape: 0.5,
            noise_rate: 0.0,
            kind: if victim {
                ScenarioKind::SarVictim
            } else {
                ScenarioKind::AoiField
            },
            seed,
        })
        .unwrap()
    }

    fn agents(cfg: &TrainConfig, seed: u64) -> (DdqnAgent, A2cAgent) {
        let mut rng = Rng::new(seed);
        (
            DdqnAgent::new(NAV_STATE_LEN, cfg, &mut rng),
            A2cAgent::new(EXPL_STATE_LEN, cfg, &mut rng),
        )
    }

    #[test]
    fn zero_budget_reports_only_the_initial_observation() {
        let truth = small_truth(3, false);
        let cfg = TrainConfig::default();
        let grid = segment_regions(20, 20, 10).unwrap();
        let (mut nav, mut expl) = agents(&cfg, 1);
        let mut rng = Rng::new(9);
        let start = AgentPose::new(10, 10);
        let m = run_full_episode(
            &truth, &grid, &mut nav, &mut expl, &cfg, start, 0, Mode::Eval, &mut rng,
        )
        .unwrap();
        assert!(m.steps.is_empty());
        assert_eq!(m.targets_selected, 0);
        // Exactly the start cell is visited.
        assert!((m.final_total_cov - 1.0 / 400.0).abs() < 1e-15);
        let expected_aoi = truth.at(10, 10) / truth.total_mass();
        assert!((m.final_aoi_cov - expected_aoi).abs() < 1e-12);
    }

    #[test]
    fn eval_episodes_are_bit_reproducible() {
        let truth = small_truth(4, true);
        let cfg = TrainConfig::default();
        let grid = segment_regions(20, 20, 10).unwrap();
        let start = AgentPose::new(3, 3);
        let run = || {
            let (mut nav, mut expl) = agents(&cfg, 7);
            let mut rng = Rng::new(123);
            run_full_episode(
                &truth, &grid, &mut nav, &mut expl, &cfg, start, 120, Mode::Eval, &mut rng,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert_eq!(a.steps.len(), 120, "budget is consumed exactly");
    }

    #[test]
    fn visit_counts_conserve_steps() {
        let truth = small_truth(5, false);
        let cfg = TrainConfig::default();
        let grid = segment_regions(20, 20, 10).unwrap();
        let (mut nav, mut expl) = agents(&cfg, 2);
        let mut rng = Rng::new(77);
        let mut ctx = EpisodeCtx::new(&truth, &cfg, AgentPose::new(5, 5), 90, true);
        let assignment = select_target(&grid, &ctx.m, &ctx.v, ctx.pose, &cfg.weights);
        navigation_phase(&mut ctx, &mut nav, assignment.t, Mode::Eval, &mut rng).unwrap();
        exploration_phase(&mut ctx, &mut expl, Mode::Eval, &mut rng).unwrap();
        // One count for the start pose plus one per action taken.
        assert_eq!(ctx.v.total(), ctx.step as u64 + 1);
        assert!(ctx.step <= 90);
    }

    #[test]
    fn navigation_phase_obeys_the_cap() {
        let truth = small_truth(6, false);
        let cfg = TrainConfig {
            nav_cap: 15,
            ..Default::default()
        };
        let (mut nav, _) = agents(&cfg, 3);
        let mut rng = Rng::new(5);
        let mut ctx = EpisodeCtx::new(&truth, &cfg, AgentPose::new(0, 0), 1000, false);
        navigation_phase(&mut ctx, &mut nav, AgentPose::new(19, 19), Mode::Eval, &mut rng).unwrap();
        assert!(ctx.step <= 15, "cap ignored: took {} steps", ctx.step);
    }

    #[test]
    fn training_phase_fills_buffer_with_consistent_transitions() {
        let truth = small_truth(7, false);
        let cfg = TrainConfig {
            nav_cap: 40,
            ..Default::default()
        };
        let (mut nav, _) = agents(&cfg, 4);
        let mut rng = Rng::new(15);
        let mut ctx = EpisodeCtx::new(&truth, &cfg, AgentPose::new(10, 10), 40, false);
        navigation_phase(&mut ctx, &mut nav, AgentPose::new(18, 2), Mode::Train, &mut rng).unwrap();
        assert_eq!(nav.buffer.len(), ctx.step, "one transition per action");
        for i in 0..nav.buffer.len() {
            assert!(nav.buffer.get(i).is_shift_consistent());
        }
    }

    #[test]
    fn victim_in_start_window_is_found_at_step_zero() {
        let mut truth = small_truth(8, false);
        truth.victim = Some((11, 10));
        truth.aoi[10 * 20 + 11] = 1.0;
        let cfg = TrainConfig::default();
        let ctx = EpisodeCtx::new(&truth, &cfg, AgentPose::new(10, 10), 10, true);
        assert_eq!(ctx.victim_found_step, Some(0));
    }

    #[test]
    fn exploration_phase_terminates_by_stagnation() {
        // A map with zero AoI: discovery flatlines immediately, so the
        // phase must end at exactly 100 steps (well under the cap).
        let truth = GroundTruthMap {
            w: 20,
            h: 20,
            aoi: vec![0.0; 400],
            victim: None,
        };
        let cfg = TrainConfig::default();
        let (_, mut expl) = agents(&cfg, 5);
        let mut rng = Rng::new(31);
        let mut ctx = EpisodeCtx::new(&truth, &cfg, AgentPose::new(10, 10), 10_000, false);
        exploration_phase(&mut ctx, &mut expl, Mode::Eval, &mut rng).unwrap();
        assert_eq!(ctx.step, 100);
    }
}
