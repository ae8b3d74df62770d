//! Parameter sweeps of the model-based optimizer over sampled channels:
//! mean and standard deviation of the minimized transmit power per value,
//! with common random numbers across values.

use crate::config::{ExperimentConfig, SweepParameter};
use crate::metrics::CsvWriter;
use irsbf_core::linalg::fro_norm;
use irsbf_core::model::{sample_channel, NetworkGeometry, UncertaintyModel};
use irsbf_core::optimizer::robust_beamforming;
use irsbf_core::sdp::{BarrierOptions, BarrierSolver};
use irsbf_core::{Error, Result, RobustStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

pub const SWEEP_HEADER: &str =
    "parameter,value,mean_power,std_power,mean_extracted_power,trials,solved,infeasible";

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    /// Mean Tr(W) over solved trials.
    pub mean_power: f64,
    pub std_power: f64,
    pub mean_extracted_power: f64,
    pub trials: usize,
    pub solved: usize,
    pub infeasible: usize,
}

/// Runs the configured sweep and returns the summary rows (also written to
/// `sweep_<parameter>.csv` under `out`).
pub fn run_sweep(config: &ExperimentConfig, out: &Path, seed_offset: u64) -> Result<PathBuf> {
    let rows = compute_sweep(config, seed_offset)?;
    std::fs::create_dir_all(out)?;
    let sweep = config.sweep.as_ref().unwrap();
    let path = out.join(format!("sweep_{}.csv", sweep.parameter));
    let mut writer = CsvWriter::create(&path, SWEEP_HEADER)?;
    for row in &rows {
        writer.line(&format!(
            "{},{},{},{},{},{},{},{}",
            row.parameter,
            row.value,
            row.mean_power,
            row.std_power,
            row.mean_extracted_power,
            row.trials,
            row.solved,
            row.infeasible
        ))?;
    }
    writer.finish()?;
    Ok(path)
}

pub fn compute_sweep(config: &ExperimentConfig, seed_offset: u64) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("config has no sweep block".into()))?;
    let parameter = sweep.parameter()?;
    let backend = BarrierSolver {
        opts: BarrierOptions { rel_gap: sweep.sdp_rel_gap, ..Default::default() },
    };

    let mut rows = Vec::new();
    for &value in &sweep.values {
        let mut geo = config.geometry.clone();
        let mut beta = sweep.beta;
        match parameter {
            SweepParameter::Gamma1 => geo.gamma1 = value,
            SweepParameter::NElements => {
                if value <= 0.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "N sweep value {value} is not a positive integer"
                    )));
                }
                geo.n = value as usize;
            }
            SweepParameter::Beta => beta = value,
        }
        geo.validate()?;
        rows.push(sweep_one_value(
            &geo,
            sweep.parameter.clone(),
            value,
            beta,
            sweep.rho,
            sweep.trials,
            seed_offset,
            &backend,
        )?);
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn sweep_one_value(
    geo: &NetworkGeometry,
    parameter: String,
    value: f64,
    beta: f64,
    rho: f64,
    trials: usize,
    seed_offset: u64,
    backend: &BarrierSolver,
) -> Result<SweepRow> {
    let mut powers = Vec::new();
    let mut extracted = Vec::new();
    let mut infeasible = 0;
    for trial in 0..trials {
        // common random numbers: trial index fixes the channel stream for
        // every sweep value
        let mut rng = ChaCha8Rng::seed_from_u64(seed_offset + trial as u64);
        let ch = sample_channel(geo, &mut rng);
        let mut unc = UncertaintyModel::exact(&ch);
        // relative uncertainty level: delta^2 = beta * ||mean||_F^2
        unc.delta_h = (beta).sqrt() * fro_norm(&unc.h_bar);
        unc.delta_f = (beta).sqrt() * fro_norm(&unc.hf_bar);
        let result = robust_beamforming(rho, &unc, &ch.g, geo, backend, &mut rng)?;
        match result.status {
            RobustStatus::Optimal => {
                powers.push(result.sdp_objective);
                extracted.push(result.transmit_power);
            }
            RobustStatus::Infeasible => infeasible += 1,
            _ => {}
        }
    }
    let solved = powers.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let mean_power = mean(&powers);
    let variance = if solved > 1 {
        powers.iter().map(|p| (p - mean_power).powi(2)).sum::<f64>() / (solved - 1) as f64
    } else {
        0.0
    };
    Ok(SweepRow {
        parameter,
        value,
        mean_power,
        std_power: variance.sqrt(),
        mean_extracted_power: mean(&extracted),
        trials,
        solved,
        infeasible,
    })
}
