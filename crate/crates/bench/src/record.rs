//! CSV rows. One schema serves every experiment:
//!
//! | experiment      | row per                       | `sweep_value` | `total_return`         | `bound_gap_root`        |
//! |-----------------|-------------------------------|---------------|------------------------|-------------------------|
//! | `time-vs-K`     | planning call and planner     | `K`           | empty                  | root `UB − LB`          |
//! | `time-vs-N`     | planning call and planner     | `N`           | empty                  | root `UB − LB`          |
//! | `total-return`  | episode and planner           | particles     | episode return         | empty                   |
//! | `bounds-audit`  | checked instance              | `K`           | allowed upper limit    | observed quantity       |
//!
//! Failed episodes keep their row with an empty `total_return`.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const HEADER: [&str; 9] = [
    "experiment",
    "planner",
    "seed",
    "sweep_value",
    "wall_clock_s",
    "chosen_action",
    "total_return",
    "steps",
    "bound_gap_root",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub planner: String,
    pub seed: u64,
    pub sweep_value: usize,
    pub wall_clock_s: f64,
    pub chosen_action: Option<usize>,
    pub total_return: Option<f64>,
    pub steps: usize,
    pub bound_gap_root: Option<f64>,
}

pub fn write_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = File::create(path).map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    if records.is_empty() {
        w.write_record(HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
