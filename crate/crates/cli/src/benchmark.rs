//! Runtime comparison of the model-based SDR pipeline against actor
//! inference across problem sizes. Methodology: monotonic clock, a fixed
//! number of discarded warm-up trials per size, median over the remaining
//! trials.

use crate::config::{BenchmarkConfig, ExperimentConfig};
use crate::metrics::{median, CsvWriter};
use irsbf_core::agent::{Agent, AgentConfig, ApproximatorSpec};
use irsbf_core::env::encoded_len;
use irsbf_core::model::{ball_sample, estimate_uncertainty_model, sample_channel, ChannelRealization};
use irsbf_core::optimizer::robust_beamforming;
use irsbf_core::sdp::{BarrierOptions, BarrierSolver};
use irsbf_core::{Result, RobustStatus};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const BENCHMARK_HEADER: &str = "m,n,mn,sdr_ms,drl_ms,trials,status";

/// Inference calls averaged inside one DRL timing trial, for clock
/// resolution.
const DRL_CALLS_PER_TRIAL: usize = 8;

#[derive(Debug, Clone)]
pub struct BenchmarkRow {
    pub m: usize,
    pub n: usize,
    pub sdr_ms: f64,
    pub drl_ms: f64,
    pub trials: usize,
    pub ok: bool,
}

pub fn run_benchmark(config: &ExperimentConfig, out: &Path, seed_offset: u64) -> Result<PathBuf> {
    config.validate()?;
    let bench = config.benchmark.clone().unwrap_or_default();
    let rows = compute_benchmark(config, &bench, seed_offset)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("benchmark.csv");
    let comments = vec![
        format!("hardware: {}", hardware_description()),
        format!("actor: randomly initialized, hidden = {:?}", bench.hidden),
        format!(
            "methodology: monotonic clock, median of {} trials, first {} discarded as warm-up, SDP rel gap {}",
            bench.trials, bench.warmup, bench.sdp_rel_gap
        ),
    ];
    let mut writer = CsvWriter::create_with_comments(&path, BENCHMARK_HEADER, &comments)?;
    for row in &rows {
        writer.line(&format!(
            "{},{},{},{},{},{},{}",
            row.m,
            row.n,
            row.m * row.n,
            row.sdr_ms,
            row.drl_ms,
            row.trials,
            if row.ok { "ok" } else { "failed" }
        ))?;
    }
    writer.finish()?;
    Ok(path)
}

pub fn compute_benchmark(
    config: &ExperimentConfig,
    bench: &BenchmarkConfig,
    seed_offset: u64,
) -> Result<Vec<BenchmarkRow>> {
    let mut rows = Vec::new();
    for &(m, n) in &bench.sizes {
        let mut geo = config.geometry.clone();
        geo.m = m;
        geo.n = n;
        geo.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed_offset ^ (m as u64) << 32 ^ n as u64);

        // SDR pipeline timing: a robust instance with small nonzero radii
        let backend = BarrierSolver {
            opts: BarrierOptions { rel_gap: bench.sdp_rel_gap, ..Default::default() },
        };
        let mut sdr_times = Vec::new();
        let mut failures = 0usize;
        let total = bench.warmup + bench.trials;
        for trial in 0..total {
            let base = sample_channel(&geo, &mut rng);
            let noise = bench.noise_level * geo.amp(geo.d1);
            let window: Vec<ChannelRealization> = (0..3)
                .map(|_| ChannelRealization {
                    g: base.g.clone(),
                    h: &base.h + ball_sample(m, n, noise, &mut rng),
                    f: base.f.clone(),
                    h_f: &base.h_f + ball_sample(m, n, noise, &mut rng),
                })
                .collect();
            let unc = estimate_uncertainty_model(&window)?;
            let started = Instant::now();
            let result = robust_beamforming(0.6, &unc, &base.g, &geo, &backend, &mut rng)?;
            let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
            if trial < bench.warmup {
                continue;
            }
            if result.status == RobustStatus::Optimal {
                sdr_times.push(elapsed_ms);
            } else {
                failures += 1;
            }
        }

        // DRL inference timing: one action from a randomly initialized actor
        let state_dim = encoded_len(&geo, config.episode.t_window);
        let agent_config = AgentConfig {
            approximator: ApproximatorSpec { hidden: bench.hidden.clone() },
            ..config.agent.clone()
        };
        let agent = Agent::new(m, n, state_dim, agent_config, seed_offset + 1)?;
        let state = DVector::from_fn(state_dim, |_, _| rng.random_range(-1.0..1.0));
        let mut drl_times = Vec::new();
        for trial in 0..total {
            let started = Instant::now();
            for _ in 0..DRL_CALLS_PER_TRIAL {
                let (action, _) = agent.act(&state, false, &mut rng);
                std::hint::black_box(&action);
            }
            let per_call_ms =
                started.elapsed().as_secs_f64() * 1e3 / DRL_CALLS_PER_TRIAL as f64;
            if trial >= bench.warmup {
                drl_times.push(per_call_ms);
            }
        }

        // a size is failed when fewer than half the timed SDR trials solved
        let ok = sdr_times.len() * 2 >= bench.trials && failures * 2 < bench.trials;
        rows.push(BenchmarkRow {
            m,
            n,
            sdr_ms: if sdr_times.is_empty() { f64::NAN } else { median(&sdr_times) },
            drl_ms: median(&drl_times),
            trials: bench.trials,
            ok,
        });
    }
    Ok(rows)
}

pub fn hardware_description() -> String {
    let model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .map(|l| l.split(':').nth(1).unwrap_or("").trim().to_string())
        })
        .unwrap_or_else(|| "unknown CPU".into());
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!("{model}, {cores} logical core(s), {}", std::env::consts::ARCH)
}
