//! Command-line interface. Every subcommand is driven through the
//! in-process [`cli`] entry point so tests can exercise exact exit
//! codes: 0 on success, 2 on configuration errors (including argument
//! and config-file problems), 1 on runtime errors.

use super::config::{load_config, ExperimentConfig, PolicyKind};
use super::experiment::{generate_eval_maps, run_experiment};
use super::metrics::{format_sig9, read_step_csv};
use super::render::render_trajectory;
use crate::agents::train::{
    joint_finetune, load_expl, load_nav, train_exploration, train_navigation, TrainCurve,
    EXPL_FINAL_WEIGHTS, EXPL_WEIGHTS, NAV_FINAL_WEIGHTS, STAGE2_WEIGHTS,
};
use crate::agents::Ablation;
use crate::env::{load_map, save_map};
use crate::error::{Error, Result};
use crate::mapping::segment_regions;
use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "explorer",
    version,
    about = "Deterministic gridworld workbench for adaptive area-of-interest exploration"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate scenario maps from the config's scenario block.
    Generate {
        /// Config file (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory the maps are written into.
        #[arg(long)]
        out: PathBuf,
        /// How many maps to generate (overrides map_count).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Train the navigation policy (two-stage curriculum).
    TrainNav {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for checkpoints and the training curve.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the exploration policy on single regions.
    TrainExplore {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fine-tune both policies jointly over full missions.
    Finetune {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory holding the stage checkpoints to start from
        /// (defaults to the output directory).
        #[arg(long)]
        weights_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an evaluation experiment.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Policy to evaluate: model, sweeping, random, curiosity.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        nav_weights: Option<PathBuf>,
        #[arg(long)]
        expl_weights: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Render a trajectory CSV over its map as a PPM image.
    Render {
        /// Map file the episode ran on.
        #[arg(long)]
        map: PathBuf,
        /// Per-step metrics CSV; omit to render the bare map.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Keep only rows of this episode number.
        #[arg(long)]
        episode: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Pixels per cell.
        #[arg(long, default_value_t = 4)]
        scale: usize,
        /// Draw region centroids for this region side length.
        #[arg(long)]
        region_side: Option<usize>,
    },
    /// Train and evaluate every ablation variant under one seed.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs the tool on an argv-style argument list (including the program
/// name) and returns the process exit code.
pub fn cli(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv.iter().map(|s| s.as_str())) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version are successful displays; everything
            // else is an argument problem, reported with usage.
            if e.use_stderr() {
                eprint!("{e}");
                return 2;
            }
            print!("{e}");
            return 0;
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn base_config(config: &Option<PathBuf>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    Ok(cfg)
}

fn write_curves(path: &Path, curves: &[TrainCurve]) -> Result<()> {
    let mut out = String::from("stage,episode,steps,total_reward\n");
    for c in curves {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            c.stage,
            c.episode,
            c.steps,
            format_sig9(c.total_reward)
        );
    }
    fs::write(path, out)?;
    Ok(())
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Generate { config, seed, out, count } => {
            let cfg = base_config(&config, seed)?.validated()?;
            let n = count.unwrap_or(cfg.map_count);
            if n == 0 {
                return Err(Error::config("map count must be at least 1"));
            }
            let maps = generate_eval_maps(&cfg, n)?;
            fs::create_dir_all(&out)?;
            for (i, m) in maps.iter().enumerate() {
                let path = out.join(format!("map_{i:03}.aoimap"));
                save_map(&path, m)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Cmd::TrainNav { config, seed, out } => {
            let cfg = base_config(&config, seed)?.validated()?;
            fs::create_dir_all(&out)?;
            let (_, curves) = train_navigation(&cfg.train, Some(&out))?;
            write_curves(&out.join("train_nav_curve.csv"), &curves)?;
            println!("navigation training finished: {} episodes", curves.len());
            Ok(())
        }
        Cmd::TrainExplore { config, seed, out } => {
            let cfg = base_config(&config, seed)?.validated()?;
            fs::create_dir_all(&out)?;
            let (_, curves) = train_exploration(&cfg.train, Some(&out))?;
            write_curves(&out.join("train_explore_curve.csv"), &curves)?;
            println!("exploration training finished: {} episodes", curves.len());
            Ok(())
        }
        Cmd::Finetune { config, seed, weights_dir, out } => {
            let cfg = base_config(&config, seed)?.validated()?;
            let from = weights_dir.unwrap_or_else(|| out.clone());
            let nav_path = from.join(STAGE2_WEIGHTS);
            let expl_path = from.join(EXPL_WEIGHTS);
            for p in [&nav_path, &expl_path] {
                if !p.exists() {
                    return Err(Error::config(format!(
                        "stage checkpoint {} not found; run train-nav and train-explore first",
                        p.display()
                    )));
                }
            }
            let mut nav = load_nav(&nav_path, &cfg.train)?;
            let mut expl = load_expl(&expl_path, &cfg.train)?;
            fs::create_dir_all(&out)?;
            let curves = joint_finetune(&mut nav, &mut expl, &cfg.train, Some(&out))?;
            write_curves(&out.join("finetune_curve.csv"), &curves)?;
            println!("fine-tuning finished: {} episodes", curves.len());
            Ok(())
        }
        Cmd::Run { config, seed, policy, out, nav_weights, expl_weights, budget, repeats } => {
            let mut cfg = base_config(&config, seed)?;
            if let Some(p) = policy {
                cfg.policy = PolicyKind::parse(&p)?;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if let Some(p) = nav_weights {
                cfg.nav_weights = Some(p);
            }
            if let Some(p) = expl_weights {
                cfg.expl_weights = Some(p);
            }
            if let Some(b) = budget {
                cfg.budget = b;
            }
            if let Some(r) = repeats {
                cfg.repeats = r;
            }
            let outputs = run_experiment(&cfg)?;
            for row in &outputs.summary {
                println!(
                    "{}: mean={} std={} n={}",
                    row.metric,
                    format_sig9(row.mean),
                    format_sig9(row.std),
                    row.n
                );
            }
            println!("summary written to {}", outputs.summary_csv.display());
            Ok(())
        }
        Cmd::Render { map, csv, episode, out, scale, region_side } => {
            if scale == 0 {
                return Err(Error::config("scale must be at least 1"));
            }
            let truth = load_map(&map)?;
            let cells: Vec<(usize, usize)> = match csv {
                Some(path) => read_step_csv(&path)?
                    .into_iter()
                    .filter(|r| episode.map_or(true, |e| r.episode == e))
                    .map(|r| (r.x, r.y))
                    .collect(),
                None => Vec::new(),
            };
            let grid = match region_side {
                Some(side) => Some(segment_regions(truth.w, truth.h, side)?),
                None => None,
            };
            render_trajectory(&truth, &cells, grid.as_ref(), scale, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Ablate { config, seed, out } => {
            let cfg = base_config(&config, seed)?.validated()?;
            for variant in [Ablation::Full, Ablation::NoLstm, Ablation::NoMap, Ablation::NoVisit] {
                let sub = out.join(variant.name());
                fs::create_dir_all(&sub)?;
                let mut vcfg = cfg.clone();
                vcfg.train.ablation = variant;
                let (mut nav, nav_curves) = train_navigation(&vcfg.train, Some(&sub))?;
                write_curves(&sub.join("train_nav_curve.csv"), &nav_curves)?;
                let (mut expl, expl_curves) = train_exploration(&vcfg.train, Some(&sub))?;
                write_curves(&sub.join("train_explore_curve.csv"), &expl_curves)?;
                let ft = joint_finetune(&mut nav, &mut expl, &vcfg.train, Some(&sub))?;
                write_curves(&sub.join("finetune_curve.csv"), &ft)?;

                vcfg.policy = PolicyKind::Model;
                vcfg.nav_weights = Some(sub.join(NAV_FINAL_WEIGHTS));
                vcfg.expl_weights = Some(sub.join(EXPL_FINAL_WEIGHTS));
                vcfg.out_dir = sub.join("eval");
                let outputs = run_experiment(&vcfg)?;
                let aoi = outputs
                    .summary
                    .iter()
                    .find(|r| r.metric == "final_aoi_cov")
                    .map(|r| r.mean)
                    .unwrap_or(0.0);
                println!("{}: final_aoi_cov mean={}", variant.name(), format_sig9(aoi));
            }
            Ok(())
        }
    }
}
