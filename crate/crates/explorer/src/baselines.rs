//! Reference policies the learned agent is measured against: a
//! boustrophedon sweep, a uniform-random walker inside the same
//! mission framework, and a curiosity-driven explorer that chases its
//! own prediction error instead of the area of interest.

use crate::agents::{
    A2cAgent, EpisodeCtx, EpisodeMetrics, HistoryWindow, Rollout, RolloutStep, TrainConfig,
};
use crate::env::{step as env_step, Action, AgentPose, GroundTruthMap, ACTIONS};
use crate::error::{Error, Result};
use crate::mapping::{discovered_mass, RegionGrid, EGO_AREA, EGO_HALF};
use crate::policy::{
    exploration_done, navigation_done, reward_exploration, reward_navigation,
    select_local_target, select_target, EXPL_STATE_LEN,
};
use crate::neural::{clip_global_norm, Activation, Adam, Dense, Mat};
use crate::rng::Rng;

/// Hidden width of the curiosity forward-dynamics predictor.
pub const CURIOSITY_PRED_HIDDEN: usize = 64;

// ---------------------------------------------------------------------------
// Boustrophedon sweep
// ---------------------------------------------------------------------------

/// State of the lawnmower sweep: where the sweep expects the agent to be
/// and which way the current row is being traversed. The sweep owns its
/// trajectory — callers must feed back exactly the poses it produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepState {
    /// Pose the next call expects.
    pub expected: AgentPose,
    /// Direction of travel on the current row.
    pub heading_east: bool,
}

impl SweepState {
    /// A sweep beginning at the top-left corner.
    pub fn new() -> Self {
        Self::starting_at(AgentPose::new(0, 0))
    }

    /// A sweep beginning at an arbitrary cell. Rows at even `y` are
    /// traversed eastward, odd rows westward, matching the trajectory a
    /// top-left sweep would produce through that cell.
    pub fn starting_at(start: AgentPose) -> Self {
        SweepState {
            expected: start,
            heading_east: start.y % 2 == 0,
        }
    }
}

impl Default for SweepState {
    fn default() -> Self {
        Self::new()
    }
}

/// Next move of the lawnmower pattern: east to the right edge, one step
/// south, west to the left edge, one step south, and so on. After the
/// final row is finished the sweep hovers forever.
///
/// Errors if `pose` is not the cell the sweep steered to last time — the
/// sweep is not a recovery controller and refuses off-path poses.
pub fn sweeping_action(state: &mut SweepState, pose: AgentPose, w: usize, h: usize) -> Result<Action> {
    if pose.x >= w || pose.y >= h {
        return Err(Error::invalid(format!(
            "pose ({}, {}) outside the {w}x{h} grid",
            pose.x, pose.y
        )));
    }
    if pose != state.expected {
        return Err(Error::invalid(format!(
            "sweep expected pose ({}, {}) but was given ({}, {}); the sweep \
             owns its trajectory and cannot resume from foreign poses",
            state.expected.x, state.expected.y, pose.x, pose.y
        )));
    }
    let last_row = pose.y == h - 1;
    let at_row_end = if state.heading_east { pose.x == w - 1 } else { pose.x == 0 };
    let action = if last_row && at_row_end {
        Action::Hover
    } else if at_row_end {
        state.heading_east = !state.heading_east;
        state.expected.y += 1;
        Action::Backward
    } else if state.heading_east {
        state.expected.x += 1;
        Action::Right
    } else {
        state.expected.x -= 1;
        Action::Left
    };
    Ok(action)
}

/// Runs a sweeping episode from `start` for the full step budget,
/// recording the same per-step metrics as every other policy. The
/// mission reward column reports the exploration reward the sweep
/// happens to collect; nothing learns from it.
pub fn run_sweeping_episode(
    truth: &GroundTruthMap,
    cfg: &TrainConfig,
    start: AgentPose,
    budget: usize,
) -> Result<EpisodeMetrics> {
    let mut ctx = EpisodeCtx::new(truth, cfg, start, budget, true);
    let mut sweep = SweepState::starting_at(start);
    while ctx.step < ctx.budget {
        let a = sweeping_action(&mut sweep, ctx.pose, truth.w, truth.h)?;
        let new_pose = env_step(truth, ctx.pose, a);
        let r = reward_exploration(new_pose, &ctx.m, &ctx.v, &cfg.reward);
        ctx.apply_move(new_pose, r);
    }
    Ok(ctx.finish(0))
}

// ---------------------------------------------------------------------------
// Uniform random walker
// ---------------------------------------------------------------------------

/// A move drawn uniformly from all five actions, independent of state.
pub fn random_action(rng: &mut Rng) -> Action {
    Action::from_index(rng.index_below(ACTIONS.len()))
}

fn random_navigation(ctx: &mut EpisodeCtx, t: AgentPose, rng: &mut Rng) {
    let (w, h) = (ctx.truth.w, ctx.truth.h);
    let mut t_l = select_local_target(t, ctx.pose, w, h);
    let mut phase_steps = 0usize;
    loop {
        if t.x.abs_diff(ctx.pose.x) <= EGO_HALF && t.y.abs_diff(ctx.pose.y) <= EGO_HALF {
            t_l = t;
        }
        if ctx.step >= ctx.budget || navigation_done(ctx.pose, t, phase_steps, ctx.cfg.nav_cap) {
            return;
        }
        let new_pose = env_step(ctx.truth, ctx.pose, random_action(rng));
        let r = reward_navigation(new_pose, &ctx.m, &ctx.v, &ctx.cfg.reward, t_l, t);
        ctx.apply_move(new_pose, r);
        phase_steps += 1;
        if ctx.pose == t_l && t_l != t {
            t_l = select_local_target(t, ctx.pose, w, h);
        }
    }
}

fn random_exploration(ctx: &mut EpisodeCtx, rng: &mut Rng) {
    let mut phase_steps = 0usize;
    let mut mass_history = vec![discovered_mass(&ctx.m)];
    loop {
        if ctx.step >= ctx.budget
            || exploration_done(&mass_history, phase_steps, ctx.cfg.expl_cap, ctx.cfg.mass_floor)
        {
            return;
        }
        let new_pose = env_step(ctx.truth, ctx.pose, random_action(rng));
        let r = reward_exploration(new_pose, &ctx.m, &ctx.v, &ctx.cfg.reward);
        ctx.apply_move(new_pose, r);
        phase_steps += 1;
        mass_history.push(discovered_mass(&ctx.m));
    }
}

/// Runs the full cyclic mission — target selection, navigation phase,
/// exploration phase, identical termination rules — but with every
/// action drawn uniformly at random. Isolates the value of the learned
/// policies from the value of the mission structure around them.
pub fn run_random_episode(
    truth: &GroundTruthMap,
    grid: &RegionGrid,
    cfg: &TrainConfig,
    start: AgentPose,
    budget: usize,
    rng: &mut Rng,
) -> Result<EpisodeMetrics> {
    let mut ctx = EpisodeCtx::new(truth, cfg, start, budget, true);
    let mut targets_selected = 0usize;
    while ctx.step < ctx.budget {
        let assignment = select_target(grid, &ctx.m, &ctx.v, ctx.pose, &cfg.weights);
        targets_selected += 1;
        random_navigation(&mut ctx, assignment.t, rng);
        if ctx.step >= ctx.budget {
            break;
        }
        random_exploration(&mut ctx, rng);
    }
    Ok(ctx.finish(targets_selected))
}

// ---------------------------------------------------------------------------
// Curiosity-driven explorer
// ---------------------------------------------------------------------------

/// Free-roaming explorer rewarded by the error of its own forward model:
/// a dense predictor maps (state, action) to the next state, the squared
/// prediction error becomes the intrinsic reward, and an actor-critic
/// policy is trained online on that reward alone. It never looks at the
/// area-of-interest signal.
pub struct CuriosityAgent {
    pub policy: A2cAgent,
    /// Predictor input layer: state plus one-hot action, ReLU.
    pub pred_in: Dense,
    /// Predictor output layer: next-state estimate, linear.
    pub pred_out: Dense,
    pub opt_pred: Adam,
    /// Gradient updates applied to the predictor.
    pub pred_updates: usize,
}

impl CuriosityAgent {
    pub fn new(cfg: &TrainConfig, rng: &mut Rng) -> Self {
        // The policy learns online within a single episode, so it runs at
        // its own (hotter) learning rate.
        let policy_cfg = TrainConfig {
            a2c_lr: cfg.curiosity_policy_lr,
            ..cfg.clone()
        };
        let policy = A2cAgent::new(EXPL_STATE_LEN, &policy_cfg, rng);
        let pred_in = Dense::new(
            EXPL_STATE_LEN + ACTIONS.len(),
            CURIOSITY_PRED_HIDDEN,
            Activation::Relu,
            rng,
        );
        let pred_out = Dense::new(CURIOSITY_PRED_HIDDEN, EXPL_STATE_LEN, Activation::Linear, rng);
        let shapes = [
            pred_in.w.len(),
            pred_in.b.len(),
            pred_out.w.len(),
            pred_out.b.len(),
        ];
        let opt_pred = Adam::new(cfg.curiosity_pred_lr, &shapes);
        CuriosityAgent {
            policy,
            pred_in,
            pred_out,
            opt_pred,
            pred_updates: 0,
        }
    }

    /// Forward-model estimate of the state after taking `action` in
    /// `state`.
    pub fn predict(&self, state: &[f64], action: usize) -> Vec<f64> {
        let x = predictor_input(state, action);
        let (hidden, _) = self.pred_in.forward(&x);
        let (pred, _) = self.pred_out.forward(&hidden);
        pred
    }

    /// Scores one transition and learns from it: returns the intrinsic
    /// reward — the mean squared error of the *current* forward model on
    /// this transition — then applies one predictor gradient step.
    pub fn curiosity_step(
        &mut self,
        state: &[f64],
        action: usize,
        next_state: &[f64],
    ) -> Result<f64> {
        assert_eq!(state.len(), EXPL_STATE_LEN, "curiosity state width");
        assert_eq!(next_state.len(), EXPL_STATE_LEN, "curiosity next-state width");
        let x = predictor_input(state, action);
        let (hidden, cache_in) = self.pred_in.forward(&x);
        let (pred, cache_out) = self.pred_out.forward(&hidden);

        let n = EXPL_STATE_LEN as f64;
        let mut r_int = 0.0;
        let mut dy = vec![0.0; EXPL_STATE_LEN];
        for j in 0..EXPL_STATE_LEN {
            let e = pred[j] - next_state[j];
            r_int += e * e / n;
            dy[j] = 2.0 * e / n;
        }

        let mut dw_out = Mat::zeros(self.pred_out.w.rows, self.pred_out.w.cols);
        let mut db_out = Mat::zeros(1, self.pred_out.b.len());
        let dh = self.pred_out.backward(&cache_out, &dy, &mut dw_out, &mut db_out);
        let mut dw_in = Mat::zeros(self.pred_in.w.rows, self.pred_in.w.cols);
        let mut db_in = Mat::zeros(1, self.pred_in.b.len());
        self.pred_in
            .backward_params_only(&cache_in, &dh, &mut dw_in, &mut db_in);

        let mut grads = vec![dw_in, db_in, dw_out, db_out];
        clip_global_norm(&mut grads, self.policy.grad_clip);
        self.opt_pred.step(
            vec![
                &mut self.pred_in.w,
                &mut self.pred_in.b,
                &mut self.pred_out.w,
                &mut self.pred_out.b,
            ],
            &grads,
        )?;
        self.pred_updates += 1;
        Ok(r_int)
    }
}

fn predictor_input(state: &[f64], action: usize) -> Vec<f64> {
    assert!(action < ACTIONS.len(), "action index {action} out of range");
    let mut x = Vec::with_capacity(state.len() + ACTIONS.len());
    x.extend_from_slice(state);
    let mut one_hot = [0.0; 5];
    one_hot[action] = 1.0;
    x.extend_from_slice(&one_hot);
    x
}

/// Runs one curiosity episode: the agent roams the whole map for the
/// full budget with no targets or phases, samples its policy, rewards
/// itself with the forward-model error of each transition, and updates
/// both predictor and policy online as it goes. The recorded reward
/// column carries the intrinsic reward.
pub fn run_curiosity_episode(
    truth: &GroundTruthMap,
    agent: &mut CuriosityAgent,
    cfg: &TrainConfig,
    start: AgentPose,
    budget: usize,
    rng: &mut Rng,
) -> Result<EpisodeMetrics> {
    let mut ctx = EpisodeCtx::new(truth, cfg, start, budget, true);
    let mut hist = HistoryWindow::new(EXPL_STATE_LEN, EGO_AREA);
    let mut rollout = Rollout::default();
    loop {
        let (s, mp) = ctx.assemble_expl();
        hist.push(s.clone(), mp);
        let (hs, hm) = hist.snapshot();
        let done = ctx.step >= ctx.budget;
        if (done || rollout.steps.len() >= cfg.rollout_len) && !rollout.steps.is_empty() {
            rollout.bootstrap = agent.policy.value(&hs, &hm)?;
            agent.policy.update(&rollout)?;
            rollout = Rollout::default();
        }
        if done {
            return Ok(ctx.finish(0));
        }

        let a = agent.policy.act(&hs, &hm, true, rng)?;
        let new_pose = env_step(truth, ctx.pose, Action::from_index(a));
        // The intrinsic reward needs the post-move state, so the move is
        // applied first and the recorded reward patched afterwards.
        ctx.apply_move(new_pose, 0.0);
        let (s_next, _) = ctx.assemble_expl();
        let r_int = agent.curiosity_step(&s, a, &s_next)?;
        ctx.total_reward += r_int;
        if let Some(rec) = ctx.records.last_mut() {
            rec.reward = r_int;
        }
        rollout.steps.push(RolloutStep {
            states: hs,
            maps: hm,
            action: a,
            reward: r_int,
        });
    }
}
