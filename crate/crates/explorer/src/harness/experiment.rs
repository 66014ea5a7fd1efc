//! The evaluation experiment: one frozen episode per (map, repeat) pair,
//! per-episode CSVs, a per-episode derived table and an aggregate
//! summary, all reproducible byte-for-byte from the master seed.

use super::config::{ExperimentConfig, PolicyKind};
use super::metrics::{
    derive_from_rows, episode_rows, read_step_csv, summarize, write_episodes_csv,
    write_step_csv, write_summary_csv, EpisodeRow, SummaryRow,
};
use crate::agents::train::{load_expl, load_nav};
use crate::agents::{run_full_episode, Mode};
use crate::baselines::{
    run_curiosity_episode, run_random_episode, run_sweeping_episode, CuriosityAgent,
};
use crate::env::{generate_scenario, load_map, save_map, AgentPose, GroundTruthMap, ScenarioSpec};
use crate::error::{Error, Result};
use crate::mapping::segment_regions;
use crate::rng::Rng;
use std::fs;
use std::path::PathBuf;

/// Evaluation substream indices. Training uses 1..=4 (`<< 32`); these
/// continue the sequence so training and evaluation randomness never
/// overlap under one master seed.
pub const STREAM_EVAL_MAPS: u64 = 5 << 32;
pub const STREAM_EVAL_EPISODE: u64 = 6 << 32;
pub const STREAM_EVAL_START: u64 = 7 << 32;

/// Everything an experiment wrote, plus the in-memory copies the caller
/// may want to inspect.
#[derive(Debug)]
pub struct ExperimentOutputs {
    pub out_dir: PathBuf,
    pub map_paths: Vec<PathBuf>,
    pub episode_csvs: Vec<PathBuf>,
    pub episodes_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub episodes: Vec<EpisodeRow>,
    pub summary: Vec<SummaryRow>,
}

/// Generates the evaluation maps for a config: one scenario per index,
/// each from its own substream of the master seed.
pub fn generate_eval_maps(cfg: &ExperimentConfig, count: usize) -> Result<Vec<GroundTruthMap>> {
    (0..count)
        .map(|i| {
            let mut r = Rng::substream(cfg.train.seed, STREAM_EVAL_MAPS + i as u64);
            let spec = ScenarioSpec { seed: r.next_u64(), ..cfg.train.scenario.clone() };
            generate_scenario(&spec)
        })
        .collect()
}

/// Runs the full evaluation experiment described by `cfg`.
///
/// Maps come from the config's file list, or are generated (and saved
/// under `out_dir/maps/`) when the list is empty. Every (map, repeat)
/// pair runs one frozen episode; the start pose depends only on the
/// master seed and the episode index, so different policies evaluated
/// under the same seed face identical starts (the sweep always starts at
/// its home corner). A missing weights file for the learned policy is a
/// configuration error raised before any episode runs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutputs> {
    let cfg = cfg.clone().validated()?;

    let mut model = None;
    if cfg.policy == PolicyKind::Model {
        let nav_path = cfg
            .nav_weights
            .clone()
            .ok_or_else(|| Error::config("policy 'model' requires nav_weights"))?;
        let expl_path = cfg
            .expl_weights
            .clone()
            .ok_or_else(|| Error::config("policy 'model' requires expl_weights"))?;
        for p in [&nav_path, &expl_path] {
            if !p.exists() {
                return Err(Error::config(format!(
                    "weights file {} does not exist",
                    p.display()
                )));
            }
        }
        model = Some((load_nav(&nav_path, &cfg.train)?, load_expl(&expl_path, &cfg.train)?));
    }

    fs::create_dir_all(&cfg.out_dir)?;
    let (maps, map_paths) = if cfg.maps.is_empty() {
        let maps = generate_eval_maps(&cfg, cfg.map_count)?;
        let dir = cfg.out_dir.join("maps");
        fs::create_dir_all(&dir)?;
        let mut paths = Vec::with_capacity(maps.len());
        for (i, m) in maps.iter().enumerate() {
            let p = dir.join(format!("map_{i:03}.aoimap"));
            save_map(&p, m)?;
            paths.push(p);
        }
        (maps, paths)
    } else {
        let maps = cfg
            .maps
            .iter()
            .map(|p| load_map(p).map_err(|e| Error::config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        (maps, cfg.maps.clone())
    };

    let mut episodes = Vec::new();
    let mut episode_csvs = Vec::new();
    for (map_index, truth) in maps.iter().enumerate() {
        let grid = segment_regions(truth.w, truth.h, cfg.train.region_side)?;
        for repeat in 0..cfg.repeats {
            let episode = map_index * cfg.repeats + repeat;
            let idx = (map_index * 4096 + repeat) as u64;
            let start = if cfg.policy == PolicyKind::Sweeping {
                AgentPose::new(0, 0)
            } else {
                let mut r = Rng::substream(cfg.train.seed, STREAM_EVAL_START + idx);
                AgentPose::new(r.index_below(truth.w), r.index_below(truth.h))
            };
            let mut rng = Rng::substream(cfg.train.seed, STREAM_EVAL_EPISODE + idx);
            let metrics = match cfg.policy {
                PolicyKind::Model => {
                    let (nav, expl) = model.as_mut().unwrap();
                    run_full_episode(
                        truth, &grid, nav, expl, &cfg.train, start, cfg.budget, Mode::Eval,
                        &mut rng,
                    )?
                }
                PolicyKind::Sweeping => run_sweeping_episode(truth, &cfg.train, start, cfg.budget)?,
                PolicyKind::Random => {
                    run_random_episode(truth, &grid, &cfg.train, start, cfg.budget, &mut rng)?
                }
                PolicyKind::Curiosity => {
                    let mut agent = CuriosityAgent::new(&cfg.train, &mut rng);
                    run_curiosity_episode(truth, &mut agent, &cfg.train, start, cfg.budget, &mut rng)?
                }
            };

            let rows = episode_rows(episode, (start.x, start.y), &metrics);
            let csv_path = cfg.out_dir.join(format!("episode_{map_index:03}_{repeat:02}.csv"));
            write_step_csv(&csv_path, &rows)?;
            // Derived metrics come from the file as written, so the summary
            // is exactly recomputable by any reader of the CSVs.
            let derived = derive_from_rows(&read_step_csv(&csv_path)?)?;
            episodes.push(EpisodeRow {
                episode,
                map_index,
                repeat,
                derived,
                steps_to_victim: metrics.victim_found_step.map(|s| s as i64).unwrap_or(-1),
                targets: metrics.targets_selected,
                victim_possible: truth.victim.is_some(),
            });
            episode_csvs.push(csv_path);
        }
    }

    let episodes_csv = cfg.out_dir.join("episodes.csv");
    write_episodes_csv(&episodes_csv, &episodes)?;
    let summary = summarize(&episodes, cfg.budget);
    let summary_csv = cfg.out_dir.join("summary.csv");
    write_summary_csv(&summary_csv, &summary)?;
    Ok(ExperimentOutputs {
        out_dir: cfg.out_dir.clone(),
        map_paths,
        episode_csvs,
        episodes_csv,
        summary_csv,
        episodes,
        summary,
    })
}
