//! CSV metric schemas and percentile helpers.
//!
//! Run CSVs contain only deterministic quantities so identical configs and
//! seeds reproduce them byte for byte; wall-clock timings go to a companion
//! `<run>.timing.csv`.

use irsbf_core::{Error, Result};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const RUN_HEADER: &str =
    "episode,step,mode,transmit_power,reward,rho,outage_rate,y_model,y_critic,merge_win_rate";
pub const TIMING_HEADER: &str = "step,wall_time_ms";
pub const AGGREGATE_HEADER: &str =
    "step,transmit_power_median,transmit_power_p10,transmit_power_p90,reward_median";

#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub episode: usize,
    pub step: usize,
    pub mode: String,
    pub transmit_power: f64,
    pub reward: f64,
    pub rho: f64,
    pub outage_rate: f64,
    pub y_model: f64,
    pub y_critic: f64,
    pub merge_win_rate: f64,
}

impl MetricsRow {
    pub fn validate(&self) -> Result<()> {
        let values = [
            self.transmit_power,
            self.reward,
            self.rho,
            self.outage_rate,
            self.y_model,
            self.y_critic,
            self.merge_win_rate,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "non-finite metrics at step {}: {values:?}",
                self.step
            )));
        }
        if !(0.0..=1.0).contains(&self.outage_rate) {
            return Err(Error::InvalidArgument(format!(
                "outage_rate {} outside [0,1]",
                self.outage_rate
            )));
        }
        Ok(())
    }

    pub fn to_csv_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.step,
            self.mode,
            self.transmit_power,
            self.reward,
            self.rho,
            self.outage_rate,
            self.y_model,
            self.y_critic,
            self.merge_win_rate
        )
        .unwrap();
        s
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::InvalidArgument(format!(
                "expected 10 CSV fields, found {}",
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad number {s:?}: {e}")))
        };
        Ok(MetricsRow {
            episode: fields[0]
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("bad episode: {e}")))?,
            step: fields[1]
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("bad step: {e}")))?,
            mode: fields[2].to_string(),
            transmit_power: num(fields[3])?,
            reward: num(fields[4])?,
            rho: num(fields[5])?,
            outage_rate: num(fields[6])?,
            y_model: num(fields[7])?,
            y_critic: num(fields[8])?,
            merge_win_rate: num(fields[9])?,
        })
    }
}

/// Append-only CSV writer with a fixed header line.
pub struct CsvWriter {
    inner: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        Self::create_with_comments(path, header, &[])
    }

    /// Comment lines (`# ...`) are written before the header.
    pub fn create_with_comments(path: &Path, header: &str, comments: &[String]) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut inner = BufWriter::new(File::create(path)?);
        for comment in comments {
            writeln!(inner, "# {comment}")?;
        }
        writeln!(inner, "{header}")?;
        Ok(CsvWriter { inner })
    }

    pub fn comment(&mut self, text: &str) -> Result<()> {
        writeln!(self.inner, "# {text}")?;
        Ok(())
    }

    pub fn line(&mut self, line: &str) -> Result<()> {
        writeln!(self.inner, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Reads the data rows of a run CSV (skipping comments and the header).
pub fn read_run_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("episode,"))
        .map(MetricsRow::from_csv_line)
        .collect()
}

/// Linear-interpolation percentile of an unsorted slice, q in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

pub fn median(values: &[f64]) -> f64 {
    percentile(values, 0.5)
}
