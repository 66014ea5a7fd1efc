//! Learners and training protocol: the double-DQN navigator, the
//! actor-critic explorer, replay and scheduling machinery, the cyclic
//! episode loop, and the staged training pipeline.

pub mod a2c;
pub mod ddqn;
pub mod episode;
pub mod history;
pub mod replay;
pub mod train;

pub use a2c::{A2cAgent, Rollout, RolloutStep};
pub use ddqn::{epsilon_value, td_target_double, DdqnAgent, EpsilonSchedule};
pub use episode::{run_full_episode, EpisodeCtx, EpisodeMetrics, Mode, StepRecord};
pub use history::HistoryWindow;
pub use replay::{ReplayBuffer, Transition};
pub use train::{joint_finetune, train_exploration, train_navigation};

use crate::env::ScenarioSpec;
use crate::error::{Error, Result};
use crate::mapping::BeliefUpdate;
use crate::policy::{ObjectiveWeights, RewardConfig, DEFAULT_EXPL_CAP, DEFAULT_MASS_FLOOR, DEFAULT_NAV_CAP};

/// Which part of the full model is switched off (inputs are zeroed or the
/// recurrent core replaced at identical interface shapes, so every variant
/// shares the same training pipeline).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ablation {
    /// The full model.
    Full,
    /// Recurrent core replaced by an equal-width feedforward layer that
    /// sees only the newest timestep (no memory).
    NoLstm,
    /// Egocentric map input zeroed.
    NoMap,
    /// Visited-adjacency state entries zeroed.
    NoVisit,
}

impl Ablation {
    /// Canonical name used in configs and output paths.
    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoLstm => "no_lstm",
            Ablation::NoMap => "no_map",
            Ablation::NoVisit => "no_visit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Ablation::Full),
            "no_lstm" => Ok(Ablation::NoLstm),
            "no_map" | "no_m" => Ok(Ablation::NoMap),
            "no_visit" | "no_v" => Ok(Ablation::NoVisit),
            other => Err(Error::config(format!(
                "unknown ablation '{other}' (expected full, no_lstm, no_map, no_visit)"
            ))),
        }
    }

    /// Whether the fused core is recurrent under this ablation.
    pub fn recurrent(self) -> bool {
        self != Ablation::NoLstm
    }
}

/// Every knob of the training pipeline in one place. Defaults reproduce
/// the reference setup; the harness config file can override each field.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Master seed; every stage and episode derives its own stream.
    pub seed: u64,
    /// Discount factor shared by both learners.
    pub gamma: f64,
    /// Navigator learning rate.
    pub ddqn_lr: f64,
    /// Navigator minibatch size.
    pub batch_size: usize,
    /// Replay buffer capacity.
    pub buffer_capacity: usize,
    /// Target network hard-sync period, in gradient updates.
    pub sync_period: usize,
    /// Environment steps between navigator gradient updates.
    pub update_every: usize,
    /// Explorer learning rate (actor and critic).
    pub a2c_lr: f64,
    /// Explorer rollout length between updates.
    pub rollout_len: usize,
    /// Entropy bonus coefficient for the actor.
    pub entropy_coef: f64,
    /// Global-norm gradient clip applied to every update.
    pub grad_clip: f64,
    /// Learning rate of the curiosity baseline's policy (it learns online
    /// from intrinsic reward, so it needs a hotter rate than the explorer).
    pub curiosity_policy_lr: f64,
    /// Learning rate of the curiosity baseline's forward-dynamics predictor.
    pub curiosity_pred_lr: f64,
    /// Reward shaping constants.
    pub reward: RewardConfig,
    /// Region-scoring weights.
    pub weights: ObjectiveWeights,
    /// Navigation phase step cap (κ₁).
    pub nav_cap: usize,
    /// Exploration phase step cap (κ₂).
    pub expl_cap: usize,
    /// Mass floor for the exploration stagnation rule.
    pub mass_floor: f64,
    /// Episodes in navigation stage 1 (single-window curriculum).
    pub stage1_episodes: usize,
    /// Step cap for a stage-1 episode.
    pub stage1_cap: usize,
    /// Episodes in navigation stage 2 (full cross-map navigation).
    pub stage2_episodes: usize,
    /// Exploration training episodes.
    pub expl_episodes: usize,
    /// Joint fine-tuning episodes (full cyclic loop, both learners on).
    pub finetune_episodes: usize,
    /// Step budget of one fine-tuning episode.
    pub finetune_budget: usize,
    /// Side of the square training maps for stage 2 and fine-tuning.
    pub stage2_side: usize,
    /// Region tile side used for grids on training maps.
    pub region_side: usize,
    /// Model variant.
    pub ablation: Ablation,
    /// Belief update rule for the allocentric map.
    pub belief_update: BeliefUpdate,
    /// Template for generated training scenarios; dimensions and seed are
    /// overridden per stage/episode.
    pub scenario: ScenarioSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            gamma: 0.95,
            ddqn_lr: 1e-3,
            batch_size: 32,
            buffer_capacity: 2000,
            sync_period: 200,
            update_every: 4,
            a2c_lr: 1e-5,
            rollout_len: 5,
            entropy_coef: 0.01,
            grad_clip: 5.0,
            curiosity_policy_lr: 1e-4,
            curiosity_pred_lr: 1e-3,
            reward: RewardConfig::default(),
            weights: ObjectiveWeights::default(),
            nav_cap: DEFAULT_NAV_CAP,
            expl_cap: DEFAULT_EXPL_CAP,
            mass_floor: DEFAULT_MASS_FLOOR,
            stage1_episodes: 700,
            stage1_cap: 100,
            stage2_episodes: 100,
            expl_episodes: 200,
            finetune_episodes: 30,
            finetune_budget: 1200,
            stage2_side: 60,
            region_side: 20,
            ablation: Ablation::Full,
            belief_update: BeliefUpdate::Overwrite,
            scenario: ScenarioSpec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!(
                "gamma must lie in (0,1), got {}",
                self.gamma
            )));
        }
        if self.batch_size == 0 || self.rollout_len == 0 || self.update_every == 0 {
            return Err(Error::config(
                "batch_size, rollout_len and update_every must be positive",
            ));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::config(
                "buffer capacity must be at least the batch size",
            ));
        }
        if self.expl_cap == 0 {
            return Err(Error::config(
                "exploration phase cap must be positive (a zero cap would let \
                 the phase loop spin without consuming steps)",
            ));
        }
        let reward = self.reward.validated()?;
        let weights = self.weights.validated()?;
        Ok(TrainConfig {
            reward,
            weights,
            ..self
        })
    }
}

/// Index of the highest value, ties to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 2.0, 2.0, 2.0]), 0);
        assert_eq!(argmax(&[-1.0, -0.5]), 1);
    }

    #[test]
    fn ablation_names_round_trip() {
        for a in [Ablation::Full, Ablation::NoLstm, Ablation::NoMap, Ablation::NoVisit] {
            assert_eq!(Ablation::parse(a.name()).unwrap(), a);
        }
        assert_eq!(Ablation::parse("no_m").unwrap(), Ablation::NoMap);
        assert_eq!(Ablation::parse("no_v").unwrap(), Ablation::NoVisit);
        assert!(Ablation::parse("bogus").is_err());
    }

    #[test]
    fn config_validation_catches_bad_values() {
        assert!(TrainConfig::default().validated().is_ok());
        let bad = TrainConfig {
            gamma: 1.0,
            ..Default::default()
        };
        assert!(bad.validated().is_err());
        let bad = TrainConfig {
            buffer_capacity: 8,
            batch_size: 32,
            ..Default::default()
        };
        assert!(bad.validated().is_err());
    }
}
