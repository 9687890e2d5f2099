//! CSV emission. Every file starts with `#`-prefixed comment lines carrying
//! the schema version and the fully resolved spec (including the master
//! seed), then a header row. Readers should enable `#` comments.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Results schema: one row per (policy, parameterization).
#[derive(Debug, Serialize)]
pub struct ResultRow {
    pub dataset: String,
    pub policy: String,
    pub params: String,
    #[serde(rename = "T")]
    pub horizon: u32,
    #[serde(rename = "K")]
    pub budget: u32,
    pub trials: u32,
    pub mean_influence: f64,
    pub stddev: f64,
    pub ci95: f64,
    /// Seconds; the only column that varies between identical runs.
    pub mean_wall_time_per_decision: f64,
}

pub const RESULT_HEADERS: &[&str] = &[
    "dataset",
    "policy",
    "params",
    "T",
    "K",
    "trials",
    "mean_influence",
    "stddev",
    "ci95",
    "mean_wall_time_per_decision",
];

/// Trace schema: cumulative budget after each step of each trial, the
/// seed-set growth curve.
#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub policy: String,
    pub params: String,
    pub trial: u32,
    pub step: u32,
    pub cumulative_budget: u32,
}

pub const TRACE_HEADERS: &[&str] = &["policy", "params", "trial", "step", "cumulative_budget"];

/// Gap-report schema: closed forms and, where tractable, simulation and
/// exhaustive search per line-family size.
#[derive(Debug, Serialize)]
pub struct GapRow {
    pub big_n: u32,
    pub p: f64,
    #[serde(rename = "T")]
    pub horizon: u32,
    #[serde(rename = "K")]
    pub budget: u32,
    pub delta_adaptive: f64,
    pub delta_nonadaptive: f64,
    pub ratio: f64,
    pub ratio_limit: f64,
    pub sim_adaptive_mean: Option<f64>,
    pub sim_stderr: Option<f64>,
    pub sim_trials: Option<u32>,
    pub exhaustive_nonadaptive: Option<f64>,
}

pub const GAP_HEADERS: &[&str] = &[
    "big_n",
    "p",
    "T",
    "K",
    "delta_adaptive",
    "delta_nonadaptive",
    "ratio",
    "ratio_limit",
    "sim_adaptive_mean",
    "sim_stderr",
    "sim_trials",
    "exhaustive_nonadaptive",
];

/// Write comment lines, an explicit header, then the rows. The header is
/// written even when `rows` is empty.
pub fn write_table<T: Serialize>(
    path: &Path,
    spec_json: &str,
    headers: &[&str],
    rows: &[T],
) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    writeln!(buf, "# schema_version={}", crate::config::SCHEMA_VERSION)?;
    writeln!(buf, "# spec={spec_json}")?;
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        w.write_record(headers)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_round_trip_through_the_csv_reader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![ResultRow {
            dataset: "toy".into(),
            policy: "greedy".into(),
            params: String::new(),
            horizon: 5,
            budget: 3,
            trials: 10,
            mean_influence: 4.25,
            stddev: 0.5,
            ci95: 0.31,
            mean_wall_time_per_decision: 0.001,
        }];
        write_table(&path, r#"{"master_seed":7}"#, RESULT_HEADERS, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# schema_version=1\n# spec={\"master_seed\":7}\n"));
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(&path)
            .unwrap();
        assert_eq!(rdr.headers().unwrap().len(), RESULT_HEADERS.len());
        let rec: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rec.len(), 1);
        assert_eq!(&rec[0][1], "greedy");
        assert_eq!(&rec[0][3], "5");
    }

    #[test]
    fn empty_tables_keep_their_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gap.csv");
        write_table::<GapRow>(&path, "{}", GAP_HEADERS, &[]).unwrap();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(&path)
            .unwrap();
        assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), GAP_HEADERS);
        assert_eq!(rdr.records().count(), 0);
    }
}
