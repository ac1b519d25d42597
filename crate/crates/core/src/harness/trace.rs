//! Per-trial regret traces.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 6] = [
    "t",
    "reward",
    "cum_reward",
    "cum_opt",
    "alpha",
    "alpha_regret",
];

/// One checkpoint row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    /// Reward of round `t` alone.
    pub reward: f64,
    pub cum_reward: f64,
    /// `max_x Σ_{s ≤ t} f_s(x)`.
    pub cum_opt: f64,
    pub alpha: f64,
    pub alpha_regret: f64,
}

impl TraceRecord {
    pub fn new(t: usize, reward: f64, cum_reward: f64, cum_opt: f64, alpha: f64) -> Self {
        TraceRecord {
            t,
            reward,
            cum_reward,
            cum_opt,
            alpha,
            alpha_regret: alpha * cum_opt - cum_reward,
        }
    }
}

/// Rounds `1, 2, 4, …` below `horizon`, then `horizon` itself.
pub fn checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut t = 1;
    while t < horizon {
        out.push(t);
        t *= 2;
    }
    if horizon > 0 {
        out.push(horizon);
    }
    out
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a trace as CSV with nine decimals and LF line endings.
pub fn write_trace(records: &[TraceRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_to(records, BufWriter::new(file)).map_err(|e| csv_error(path, e))
}

pub fn write_trace_to<W: Write>(records: &[TraceRecord], out: W) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(TRACE_HEADER)?;
    for r in records {
        writer.write_record([
            r.t.to_string(),
            format!("{:.9}", r.reward),
            format!("{:.9}", r.cum_reward),
            format!("{:.9}", r.cum_opt),
            format!("{:.9}", r.alpha),
            format!("{:.9}", r.alpha_regret),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(Error::InvalidArgument(format!(
            "{}: unexpected trace header {header:?}",
            path.display()
        )));
    }
    reader
        .deserialize()
        .collect::<csv::Result<Vec<TraceRecord>>>()
        .map_err(|e| csv_error(path, e))
}

/// Whether `alpha_regret / √t` is non-increasing over the final half of the
/// rows, up to `tol`.
pub fn tail_nonincreasing(records: &[TraceRecord], tol: f64) -> bool {
    let tail = &records[records.len() - records.len().div_ceil(2)..];
    tail.windows(2).all(|w| {
        let before = w[0].alpha_regret / (w[0].t as f64).sqrt();
        let after = w[1].alpha_regret / (w[1].t as f64).sqrt();
        after <= before + tol
    })
}
