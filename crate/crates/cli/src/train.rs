//! Training runs: one CSV per (seed, mode) pair plus per-mode aggregates of
//! per-step median and 10th/90th percentiles across seeds.

use crate::config::{ExperimentConfig, ModeName};
use crate::metrics::{
    median, percentile, CsvWriter, MetricsRow, AGGREGATE_HEADER, RUN_HEADER, TIMING_HEADER,
};
use irsbf_core::agent::{Agent, ReplayBuffer};
use irsbf_core::env::{encoded_len, Environment};
use irsbf_core::sdp::{BarrierOptions, BarrierSolver};
use irsbf_core::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Derives the environment stream seed for a run; the agent uses the plain
/// seed so that the two ChaCha streams never collide.
fn env_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

pub fn run_file_name(mode: ModeName, seed: u64) -> String {
    format!("run_{}_seed{}.csv", mode.as_str(), seed)
}

/// Trains every (seed, mode) pair in the config and writes run, timing, and
/// aggregate CSVs into `out`. Returns the run CSV paths.
pub fn run_training(
    config: &ExperimentConfig,
    out: &Path,
    seed_offset: u64,
) -> Result<Vec<PathBuf>> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    let mut run_paths = Vec::new();
    for mode in &config.training.modes {
        let mut per_seed_rows: Vec<Vec<MetricsRow>> = Vec::new();
        for &seed in &config.seeds {
            let seed = seed + seed_offset;
            let path = out.join(run_file_name(*mode, seed));
            let rows = train_one(config, *mode, seed, &path, out)?;
            per_seed_rows.push(rows);
            run_paths.push(path);
        }
        write_aggregate(&per_seed_rows, out, *mode)?;
    }
    Ok(run_paths)
}

/// Trains a single run, streaming rows to the run CSV and wall times to the
/// timing sidecar. Returns the rows for aggregation.
pub fn train_one(
    config: &ExperimentConfig,
    mode: ModeName,
    seed: u64,
    path: &Path,
    out: &Path,
) -> Result<Vec<MetricsRow>> {
    let geo = config.geometry.clone();
    let state_dim = encoded_len(&geo, config.episode.t_window);
    let mut env = Environment::new(
        geo.clone(),
        config.episode.clone(),
        ChaCha8Rng::seed_from_u64(env_seed(seed)),
    )?;
    let mut agent = Agent::new(geo.m, geo.n, state_dim, config.agent.clone(), seed)?;
    let mut buffer = ReplayBuffer::new(config.agent.buffer_capacity);
    let backend = BarrierSolver {
        opts: BarrierOptions { rel_gap: config.training.sdp_rel_gap, ..Default::default() },
    };

    let mut writer = CsvWriter::create(path, RUN_HEADER)?;
    let timing_path = path.with_extension("timing.csv");
    let mut timing = CsvWriter::create(&timing_path, TIMING_HEADER)?;
    let _ = out;

    let mut rows = Vec::with_capacity(config.training.steps);
    let mut merge_wins = 0usize;
    for step in 0..config.training.steps {
        let started = Instant::now();
        let metrics = agent.train_step(&mut env, &mut buffer, mode.to_train_mode(), &backend)?;
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        if metrics.merge_win {
            merge_wins += 1;
        }
        let outages = env.state.outages.iter().filter(|&&o| o).count();
        let row = MetricsRow {
            episode: step / config.episode.steps_per_episode,
            step,
            mode: mode.as_str().to_string(),
            transmit_power: metrics.transmit_power,
            reward: metrics.reward,
            rho: metrics.rho,
            outage_rate: outages as f64 / env.state.outages.len() as f64,
            y_model: metrics.y_model,
            y_critic: metrics.y_critic,
            merge_win_rate: merge_wins as f64 / (step + 1) as f64,
        };
        row.validate()?;
        writer.line(&row.to_csv_line())?;
        timing.line(&format!("{step},{wall_ms}"))?;
        rows.push(row);
    }
    writer.finish()?;
    timing.finish()?;
    Ok(rows)
}

/// Aggregate file: per-step median/p10/p90 of transmit power and median
/// reward across seeds. A pure function of the run rows.
pub fn write_aggregate(
    per_seed_rows: &[Vec<MetricsRow>],
    out: &Path,
    mode: ModeName,
) -> Result<PathBuf> {
    let path = out.join(format!("aggregate_{}.csv", mode.as_str()));
    let mut writer = CsvWriter::create(&path, AGGREGATE_HEADER)?;
    let steps = per_seed_rows.iter().map(|r| r.len()).min().unwrap_or(0);
    for step in 0..steps {
        let powers: Vec<f64> = per_seed_rows.iter().map(|r| r[step].transmit_power).collect();
        let rewards: Vec<f64> = per_seed_rows.iter().map(|r| r[step].reward).collect();
        writer.line(&format!(
            "{},{},{},{},{}",
            step,
            median(&powers),
            percentile(&powers, 0.1),
            percentile(&powers, 0.9),
            median(&rewards)
        ))?;
    }
    writer.finish()?;
    Ok(path)
}
