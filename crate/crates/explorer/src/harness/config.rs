//! Experiment configuration: a strict, line-oriented `key = value` text
//! format with `#` comments and dotted section keys. Unknown keys are
//! rejected so typos cannot silently fall back to defaults.

use crate::agents::{Ablation, TrainConfig};
use crate::env::ScenarioKind;
use crate::error::{Error, Result};
use crate::mapping::{BeliefUpdate, VisitScale};
use std::path::{Path, PathBuf};

/// Which policy an evaluation run drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    /// The trained two-network model (requires weight files).
    Model,
    /// Deterministic boustrophedon sweep.
    Sweeping,
    /// Uniform-random actions inside the same mission framework.
    Random,
    /// Online curiosity-driven explorer.
    Curiosity,
}

impl PolicyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(PolicyKind::Model),
            "sweeping" => Ok(PolicyKind::Sweeping),
            "random" => Ok(PolicyKind::Random),
            "curiosity" => Ok(PolicyKind::Curiosity),
            other => Err(Error::config(format!(
                "unknown policy '{other}' (expected model, sweeping, random, curiosity)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Model => "model",
            PolicyKind::Sweeping => "sweeping",
            PolicyKind::Random => "random",
            PolicyKind::Curiosity => "curiosity",
        }
    }
}

/// Everything an experiment needs: the training/model constants plus the
/// run-level settings (policy, maps, budget, repeats, output paths).
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub policy: PolicyKind,
    /// Step budget of one evaluation episode.
    pub budget: usize,
    /// Evaluation episodes per map.
    pub repeats: usize,
    /// Number of maps to generate when no explicit map files are listed.
    pub map_count: usize,
    /// Explicit map files; when non-empty these replace generation.
    pub maps: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub nav_weights: Option<PathBuf>,
    pub expl_weights: Option<PathBuf>,
    /// Pixels per cell in rendered trajectory images.
    pub render_scale: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: TrainConfig::default(),
            policy: PolicyKind::Model,
            budget: 8000,
            repeats: 5,
            map_count: 10,
            maps: Vec::new(),
            out_dir: PathBuf::from("out"),
            nav_weights: None,
            expl_weights: None,
            render_scale: 4,
        }
    }
}

impl ExperimentConfig {
    pub fn validated(self) -> Result<Self> {
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        if self.repeats > 4096 {
            return Err(Error::config("repeats must be at most 4096"));
        }
        if self.maps.is_empty() && self.map_count == 0 {
            return Err(Error::config(
                "either list map files or set map_count to at least 1",
            ));
        }
        if self.render_scale == 0 {
            return Err(Error::config("render_scale must be at least 1"));
        }
        let train = self.train.validated()?;
        Ok(ExperimentConfig { train, ..self })
    }
}

/// Parses the text config format. Each non-empty line outside comments
/// must read `key = value`; keys are dotted to group related settings.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    // The belief rule is assembled from two keys after the scan.
    let mut belief_kind = "overwrite".to_string();
    let mut belief_rate = 0.3f64;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {line_no}: expected 'key = value', got '{line}'"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::config(format!("line {line_no}: key '{key}' has no value")));
        }
        apply_key(&mut cfg, &mut belief_kind, &mut belief_rate, key, value)
            .map_err(|e| Error::config(format!("line {line_no}: {e}")))?;
    }

    cfg.train.belief_update = match belief_kind.as_str() {
        "overwrite" => BeliefUpdate::Overwrite,
        "ema" => {
            if !(belief_rate > 0.0 && belief_rate <= 1.0) {
                return Err(Error::config(format!(
                    "belief.ema_rate must lie in (0,1], got {belief_rate}"
                )));
            }
            BeliefUpdate::Ema(belief_rate)
        }
        other => {
            return Err(Error::config(format!(
                "belief.update must be 'overwrite' or 'ema', got '{other}'"
            )))
        }
    };
    Ok(cfg)
}

/// Loads and parses a config file; a missing or unreadable file is a
/// configuration error.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn apply_key(
    cfg: &mut ExperimentConfig,
    belief_kind: &mut String,
    belief_rate: &mut f64,
    key: &str,
    v: &str,
) -> Result<()> {
    let t = &mut cfg.train;
    match key {
        "seed" => t.seed = num(key, v)?,
        "policy" => cfg.policy = PolicyKind::parse(v)?,
        "budget" => cfg.budget = num(key, v)?,
        "repeats" => cfg.repeats = num(key, v)?,
        "map_count" => cfg.map_count = num(key, v)?,
        "map" => cfg.maps.push(PathBuf::from(v)),
        "out_dir" => cfg.out_dir = PathBuf::from(v),
        "nav_weights" => cfg.nav_weights = Some(PathBuf::from(v)),
        "expl_weights" => cfg.expl_weights = Some(PathBuf::from(v)),
        "render_scale" => cfg.render_scale = num(key, v)?,
        "ablation" => t.ablation = Ablation::parse(v)?,

        "scenario.w" => t.scenario.w = num(key, v)?,
        "scenario.h" => t.scenario.h = num(key, v)?,
        "scenario.blob_count" => t.scenario.blob_count = num(key, v)?,
        "scenario.density" => t.scenario.density = num(key, v)?,
        "scenario.size" => t.scenario.size = num(key, v)?,
        "scenario.shape" => t.scenario.shape = num(key, v)?,
        "scenario.noise_rate" => t.scenario.noise_rate = num(key, v)?,
        "scenario.kind" => {
            t.scenario.kind = match v {
                "aoi" => ScenarioKind::AoiField,
                "sar" => ScenarioKind::SarVictim,
                other => {
                    return Err(Error::config(format!(
                        "scenario.kind must be 'aoi' or 'sar', got '{other}'"
                    )))
                }
            }
        }

        "reward.r_aoi" => t.reward.r_aoi = num(key, v)?,
        "reward.r_visited" => t.reward.r_visited = num(key, v)?,
        "reward.r_reach_tl" => t.reward.r_reach_tl = num(key, v)?,
        "reward.r_reach_t" => t.reward.r_reach_t = num(key, v)?,
        "reward.eps_aoi" => t.reward.eps_aoi = num(key, v)?,
        "reward.step_cost" => t.reward.step_cost = num(key, v)?,
        "reward.visit_scale" => {
            t.reward.visit_scale = if v == "binary" {
                VisitScale::Binary
            } else {
                VisitScale::Scaled(num(key, v)?)
            }
        }

        "weights.alpha" => t.weights.w_alpha = num(key, v)?,
        "weights.beta" => t.weights.w_beta = num(key, v)?,
        "weights.zeta" => t.weights.w_zeta = num(key, v)?,

        "phase.nav_cap" => t.nav_cap = num(key, v)?,
        "phase.expl_cap" => t.expl_cap = num(key, v)?,
        "phase.mass_floor" => t.mass_floor = num(key, v)?,

        "belief.update" => *belief_kind = v.to_string(),
        "belief.ema_rate" => *belief_rate = num(key, v)?,

        "train.gamma" => t.gamma = num(key, v)?,
        "train.ddqn_lr" => t.ddqn_lr = num(key, v)?,
        "train.batch_size" => t.batch_size = num(key, v)?,
        "train.buffer_capacity" => t.buffer_capacity = num(key, v)?,
        "train.sync_period" => t.sync_period = num(key, v)?,
        "train.update_every" => t.update_every = num(key, v)?,
        "train.a2c_lr" => t.a2c_lr = num(key, v)?,
        "train.rollout_len" => t.rollout_len = num(key, v)?,
        "train.entropy_coef" => t.entropy_coef = num(key, v)?,
        "train.grad_clip" => t.grad_clip = num(key, v)?,
        "train.curiosity_policy_lr" => t.curiosity_policy_lr = num(key, v)?,
        "train.curiosity_pred_lr" => t.curiosity_pred_lr = num(key, v)?,
        "train.stage1_episodes" => t.stage1_episodes = num(key, v)?,
        "train.stage1_cap" => t.stage1_cap = num(key, v)?,
        "train.stage2_episodes" => t.stage2_episodes = num(key, v)?,
        "train.expl_episodes" => t.expl_episodes = num(key, v)?,
        "train.finetune_episodes" => t.finetune_episodes = num(key, v)?,
        "train.finetune_budget" => t.finetune_budget = num(key, v)?,
        "train.stage2_side" => t.stage2_side = num(key, v)?,
        "train.region_side" => t.region_side = num(key, v)?,

        other => return Err(Error::config(format!("unknown key '{other}'"))),
    }
    Ok(())
}

/// Parses a numeric value, naming the key in the error.
fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("key '{key}': cannot parse '{v}' as a number")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.policy, PolicyKind::Model);
        assert_eq!(cfg.budget, 8000);
        assert_eq!(cfg.repeats, 5);
        assert_eq!(cfg.train.gamma, 0.95);
    }

    #[test]
    fn comments_blanks_and_dotted_keys_parse() {
        let text = "
# evaluation run
seed = 42
policy = sweeping   # overridden policy
budget = 500

reward.r_aoi = 2.5
weights.zeta = -0.7
scenario.w = 60
scenario.h = 60
scenario.kind = sar
phase.nav_cap = 123
belief.update = ema
belief.ema_rate = 0.25
map = maps/a.aoimap
map = maps/b.aoimap
reward.visit_scale = binary
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.train.seed, 42);
        assert_eq!(cfg.policy, PolicyKind::Sweeping);
        assert_eq!(cfg.budget, 500);
        assert_eq!(cfg.train.reward.r_aoi, 2.5);
        assert_eq!(cfg.train.weights.w_zeta, -0.7);
        assert_eq!((cfg.train.scenario.w, cfg.train.scenario.h), (60, 60));
        assert_eq!(cfg.train.scenario.kind, ScenarioKind::SarVictim);
        assert_eq!(cfg.train.nav_cap, 123);
        assert_eq!(cfg.train.belief_update, BeliefUpdate::Ema(0.25));
        assert_eq!(cfg.maps.len(), 2);
        assert_eq!(cfg.train.reward.visit_scale, VisitScale::Binary);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse_config("seed = 1\nrewardd.r_aoi = 2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("unknown key"), "{msg}");
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn malformed_lines_and_values_are_rejected() {
        assert!(parse_config("just words\n").is_err());
        assert!(parse_config("budget =\n").is_err());
        assert!(parse_config("budget = soon\n").is_err());
        assert!(parse_config("belief.update = maybe\n").is_err());
        assert!(parse_config("policy = ideal\n").is_err());
        assert!(parse_config("scenario.kind = flat\n").is_err());
    }

    #[test]
    fn validation_rejects_bad_run_settings() {
        let mut cfg = parse_config("repeats = 1\n").unwrap();
        cfg.repeats = 0;
        assert!(cfg.clone().validated().is_err());
        let cfg = parse_config("map_count = 0\n").unwrap();
        assert!(cfg.validated().is_err());
        let cfg = parse_config("render_scale = 0\n").unwrap();
        assert!(cfg.validated().is_err());
        let cfg = parse_config("train.gamma = 1.5\n").unwrap();
        assert!(cfg.validated().is_err());
        // A map list with map_count 0 is fine: files win over generation.
        let cfg = parse_config("map_count = 0\nmap = x.aoimap\n").unwrap();
        assert!(cfg.validated().is_ok());
    }

    #[test]
    fn ablation_and_curiosity_keys_parse() {
        let cfg = parse_config(
            "ablation = no_lstm\ntrain.curiosity_policy_lr = 0.002\ntrain.curiosity_pred_lr = 0.02\n",
        )
        .unwrap();
        assert_eq!(cfg.train.ablation, Ablation::NoLstm);
        assert_eq!(cfg.train.curiosity_policy_lr, 0.002);
        assert_eq!(cfg.train.curiosity_pred_lr, 0.02);
    }
}
