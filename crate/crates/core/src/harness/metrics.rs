//! CSV outputs. Each file starts with a `# schema: <name> v<version>` line
//! followed by the header row; the schemas below are frozen.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const METRICS_SCHEMA: &str = "# schema: metrics v1";
pub const METRICS_HEADER: [&str; 10] = [
    "run_id",
    "seed",
    "sweep_value",
    "method",
    "slot",
    "mean_total_delay",
    "mean_v2i_delay",
    "mean_v2v_delay",
    "violations",
    "reward",
];

pub const REWARD_CURVE_SCHEMA: &str = "# schema: reward_curve v1";
pub const REWARD_CURVE_HEADER: [&str; 2] = ["episode", "mean_reward"];

pub const EPISODE_DELAYS_SCHEMA: &str = "# schema: episode_delays v1";
pub const EPISODE_DELAYS_HEADER: [&str; 6] = ["run_id", "seed", "sweep_value", "method", "episode", "mean_total_delay"];

pub const FAILURES_SCHEMA: &str = "# schema: failures v1";
pub const FAILURES_HEADER: [&str; 5] = ["run_id", "seed", "sweep_value", "method", "error"];

pub const LINE_SWEEP_SCHEMA: &str = "# schema: line_sweep v1";
pub const LINE_SWEEP_HEADER: [&str; 7] = [
    "sweep_value",
    "method",
    "seeds",
    "mean_total_delay",
    "mean_v2i_delay",
    "mean_v2v_delay",
    "violations",
];

pub const LINK_DELAYS_SCHEMA: &str = "# schema: link_delays v1";
pub const LINK_DELAYS_HEADER: [&str; 4] = ["sweep_value", "method", "link", "mean_delay"];

pub const BOXPLOT_SCHEMA: &str = "# schema: boxplot v1";
pub const BOXPLOT_HEADER: [&str; 5] = ["sweep_value", "method", "seed", "episode", "mean_total_delay"];

/// One evaluated slot of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub seed: u64,
    /// Empty when the run is not part of a sweep.
    pub sweep_value: Option<f64>,
    pub method: String,
    pub slot: usize,
    pub mean_total_delay: f64,
    pub mean_v2i_delay: f64,
    pub mean_v2v_delay: f64,
    pub violations: usize,
    pub reward: f64,
}

/// Mean delay of one test round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeDelay {
    pub run_id: String,
    pub seed: u64,
    pub sweep_value: Option<f64>,
    pub method: String,
    pub episode: usize,
    pub mean_total_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub run_id: String,
    pub seed: u64,
    pub sweep_value: Option<f64>,
    pub method: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSweepRow {
    pub sweep_value: Option<f64>,
    pub method: String,
    pub seeds: usize,
    pub mean_total_delay: f64,
    pub mean_v2i_delay: f64,
    pub mean_v2v_delay: f64,
    pub violations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDelayRow {
    pub sweep_value: Option<f64>,
    pub method: String,
    pub link: String,
    pub mean_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub sweep_value: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub episode: usize,
    pub mean_total_delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardPoint {
    pub episode: usize,
    pub mean_reward: f64,
}

/// Serializes `rows` under a schema line and header into bytes.
pub fn to_csv_bytes<T: Serialize>(schema: &str, header: &[&str], rows: &[T]) -> Result<Vec<u8>, HarnessError> {
    let mut out = Vec::new();
    writeln!(out, "{schema}").expect("writing to a Vec");
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
    }
    Ok(out)
}

pub fn write_csv<T: Serialize>(path: &Path, schema: &str, header: &[&str], rows: &[T]) -> Result<(), HarnessError> {
    super::write_file(path, &to_csv_bytes(schema, header, rows)?)
}

/// Reads a file written by [`write_csv`], checking the schema line and the
/// header.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, schema: &str, header: &[&str]) -> Result<Vec<T>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let schema_error = |message: String| HarnessError::Schema {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or("").trim_end_matches('\r');
    if first != schema {
        return Err(schema_error(format!("expected `{schema}`, found `{first}`")));
    }
    let body = lines.next().unwrap_or("");
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(schema_error(format!("header {found:?} does not match {header:?}")));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(HarnessError::from)
}
