//! Temporary calibration probe: stage-1 navigation learning vs the
//! held-out reach-rate / path-ratio evaluation.

use explorer::agents::episode::navigation_phase;
use explorer::agents::train::empty_map;
use explorer::agents::{train_navigation, EpisodeCtx, Mode, TrainConfig};
use explorer::env::AgentPose;
use explorer::mapping::EGO_SIDE;
use explorer::rng::Rng;
use std::time::Instant;

fn main() {
    let episodes: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(400);
    let mut cfg = TrainConfig::default();
    cfg.stage1_episodes = episodes;
    cfg.stage2_episodes = 0;
    let t0 = Instant::now();
    let (mut nav, curves) = train_navigation(&cfg, None).unwrap();
    let train_time = t0.elapsed();
    for chunk in curves.chunks(50) {
        let ms: f64 = chunk.iter().map(|c| c.steps as f64).sum::<f64>() / chunk.len() as f64;
        let mr: f64 = chunk.iter().map(|c| c.total_reward).sum::<f64>() / chunk.len() as f64;
        println!("ep {:>4}..: steps {:6.1} reward {:8.2}", chunk[0].episode, ms, mr);
    }

    let t1 = Instant::now();
    let side = EGO_SIDE;
    let mut ecfg = cfg.clone();
    ecfg.nav_cap = 500;
    let (mut reached, mut sp, mut sm, mut spr, mut smr) = (0usize, 0.0, 0.0, 0.0, 0.0);
    let truth = empty_map(side);
    for i in 0..100u64 {
        let mut rng = Rng::substream(4242, (9u64 << 32) + i);
        let start = AgentPose::new(rng.index_below(side), rng.index_below(side));
        let t = loop {
            let p = AgentPose::new(rng.index_below(side), rng.index_below(side));
            if p != start && p.x.abs_diff(start.x) <= 12 && p.y.abs_diff(start.y) <= 12 {
                break p;
            }
        };
        let manh = (t.x.abs_diff(start.x) + t.y.abs_diff(start.y)) as f64;
        let mut ctx = EpisodeCtx::new(&truth, &ecfg, start, 500, false);
        navigation_phase(&mut ctx, &mut nav, t, Mode::Eval, &mut rng).unwrap();
        sp += ctx.step as f64;
        sm += manh;
        if ctx.pose == t {
            reached += 1;
            spr += ctx.step as f64;
            smr += manh;
        }
    }
    println!("train {train_time:?} eval {:?}", t1.elapsed());
    println!(
        "reach {reached}/100  path(all) {:.1} manh(all) {:.1}  path(reached) {:.1} manh(reached) {:.1} ratio {:.3}",
        sp / 100.0,
        sm / 100.0,
        spr / reached.max(1) as f64,
        smr / reached.max(1) as f64,
        spr / smr.max(1e-9)
    );
}
