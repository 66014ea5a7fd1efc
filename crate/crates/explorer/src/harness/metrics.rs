//! Metrics files: the per-step episode CSV, per-episode derived rows,
//! and the aggregate summary. Every number is written with 9 significant
//! digits and every derived statistic is computed from the values as
//! written, so an independent recomputation from the files matches the
//! emitted summary exactly.

use crate::agents::{EpisodeMetrics, StepRecord};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Header of a per-step episode CSV.
pub const CSV_HEADER: &str = "episode,step,x,y,aoi_cov,total_cov,reward";
/// Header of the per-episode derived-metrics CSV.
pub const EPISODES_HEADER: &str = "episode,map,repeat,steps_to_30,steps_to_50,steps_to_70,\
final_aoi_cov,final_total_cov,total_reward,steps_to_victim,victim_map,targets";
/// Header of the summary CSV.
pub const SUMMARY_HEADER: &str = "metric,mean,std,n";
/// AoI coverage thresholds reported as steps-to-threshold metrics.
pub const AOI_THRESHOLDS: [f64; 3] = [0.3, 0.5, 0.7];

/// Formats a float with 9 significant decimal digits (plain decimal, no
/// exponent). Zero is written as `0`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (8 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// One row of a per-step CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRow {
    pub episode: usize,
    pub step: usize,
    pub x: usize,
    pub y: usize,
    pub aoi_cov: f64,
    pub total_cov: f64,
    pub reward: f64,
}

/// Turns finished episode metrics into CSV rows, prepending the step-0
/// row that records the start pose and the coverage of the initial
/// observation.
pub fn episode_rows(
    episode: usize,
    start: (usize, usize),
    metrics: &EpisodeMetrics,
) -> Vec<StepRow> {
    let mut rows = Vec::with_capacity(metrics.steps.len() + 1);
    rows.push(StepRow {
        episode,
        step: 0,
        x: start.0,
        y: start.1,
        aoi_cov: metrics.start_aoi_cov,
        total_cov: metrics.start_total_cov,
        reward: 0.0,
    });
    for r in &metrics.steps {
        let StepRecord { step, x, y, aoi_cov, total_cov, reward } = *r;
        rows.push(StepRow { episode, step, x, y, aoi_cov, total_cov, reward });
    }
    rows
}

/// Writes a per-step CSV (header plus rows).
pub fn write_step_csv(path: &Path, rows: &[StepRow]) -> Result<()> {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.episode,
            r.step,
            r.x,
            r.y,
            format_sig9(r.aoi_cov),
            format_sig9(r.total_cov),
            format_sig9(r.reward)
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a per-step CSV back, verifying the header and field count.
pub fn read_step_csv(path: &Path) -> Result<Vec<StepRow>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::format(format!("cannot read metrics csv {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(format!("{}: empty metrics csv", path.display())))?;
    if header != CSV_HEADER {
        return Err(Error::format(format!(
            "{}: bad header '{header}' (expected '{CSV_HEADER}')",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::format(format!(
                "{}: line {}: expected 7 fields, got {}",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            Error::format(format!("{}: line {}: bad {what}", path.display(), i + 2))
        };
        rows.push(StepRow {
            episode: fields[0].parse().map_err(|_| bad("episode"))?,
            step: fields[1].parse().map_err(|_| bad("step"))?,
            x: fields[2].parse().map_err(|_| bad("x"))?,
            y: fields[3].parse().map_err(|_| bad("y"))?,
            aoi_cov: fields[4].parse().map_err(|_| bad("aoi_cov"))?,
            total_cov: fields[5].parse().map_err(|_| bad("total_cov"))?,
            reward: fields[6].parse().map_err(|_| bad("reward"))?,
        });
    }
    Ok(rows)
}

/// First index at which the series reaches each threshold; −1 if never.
pub fn compute_threshold_steps(series: &[f64], thresholds: &[f64]) -> Vec<i64> {
    thresholds
        .iter()
        .map(|&t| {
            series
                .iter()
                .position(|&c| c >= t)
                .map(|i| i as i64)
                .unwrap_or(-1)
        })
        .collect()
}

/// Metrics of one episode derived purely from its written CSV rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedMetrics {
    /// Steps to each entry of [`AOI_THRESHOLDS`]; −1 if never reached.
    pub steps_to: Vec<i64>,
    pub final_aoi_cov: f64,
    pub final_total_cov: f64,
    /// Sum of the reward column in row order.
    pub total_reward: f64,
}

/// Derives threshold/final metrics from the ordered rows of one episode.
pub fn derive_from_rows(rows: &[StepRow]) -> Result<DerivedMetrics> {
    if rows.is_empty() {
        return Err(Error::invalid("cannot derive metrics from an empty episode"));
    }
    let series: Vec<f64> = rows.iter().map(|r| r.aoi_cov).collect();
    let last = rows.last().unwrap();
    Ok(DerivedMetrics {
        steps_to: compute_threshold_steps(&series, &AOI_THRESHOLDS),
        final_aoi_cov: last.aoi_cov,
        final_total_cov: last.total_cov,
        total_reward: rows.iter().map(|r| r.reward).sum(),
    })
}

/// One complete row of the per-episode derived-metrics file.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub map_index: usize,
    pub repeat: usize,
    pub derived: DerivedMetrics,
    /// −1 when the map has no victim or it was never seen.
    pub steps_to_victim: i64,
    pub targets: usize,
    /// Whether the episode's map contains a victim at all. Episodes on
    /// victim-free maps write −1 like never-found ones; this flag keeps
    /// the two cases apart in the summary.
    pub victim_possible: bool,
}

/// Writes the per-episode derived table.
pub fn write_episodes_csv(path: &Path, rows: &[EpisodeRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(EPISODES_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.episode,
            r.map_index,
            r.repeat,
            r.derived.steps_to[0],
            r.derived.steps_to[1],
            r.derived.steps_to[2],
            format_sig9(r.derived.final_aoi_cov),
            format_sig9(r.derived.final_total_cov),
            format_sig9(r.derived.total_reward),
            r.steps_to_victim,
            u8::from(r.victim_possible),
            r.targets
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Mean and sample standard deviation (n−1 denominator; 0 when n ≤ 1).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// One aggregate summary line.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Aggregates per-episode rows into summary statistics. Steps-to-threshold
/// and steps-to-victim sentinels (−1, never reached) are censored at the
/// episode budget so they cannot shrink the mean; both metric styles —
/// steps-to-threshold and coverage-at-budget — are emitted.
pub fn summarize(rows: &[EpisodeRow], budget: usize) -> Vec<SummaryRow> {
    let censor = |v: i64| if v < 0 { budget as f64 } else { v as f64 };
    let mut out = Vec::new();
    let mut push = |metric: &str, values: Vec<f64>| {
        let (mean, std) = mean_std(&values);
        out.push(SummaryRow { metric: metric.to_string(), mean, std, n: values.len() });
    };
    for (i, label) in ["steps_to_30", "steps_to_50", "steps_to_70"].iter().enumerate() {
        push(label, rows.iter().map(|r| censor(r.derived.steps_to[i])).collect());
    }
    push("final_aoi_cov", rows.iter().map(|r| r.derived.final_aoi_cov).collect());
    push("final_total_cov", rows.iter().map(|r| r.derived.final_total_cov).collect());
    push("total_reward", rows.iter().map(|r| r.derived.total_reward).collect());
    let victim: Vec<f64> = rows
        .iter()
        .filter(|r| r.victim_possible)
        .map(|r| censor(r.steps_to_victim))
        .collect();
    if !victim.is_empty() {
        push("steps_to_victim", victim);
    }
    out
}

/// Writes the summary CSV.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.metric,
            format_sig9(r.mean),
            format_sig9(r.std),
            r.n
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}
