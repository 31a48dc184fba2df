use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{CsiMode, SweepAxis};
use crate::receivers::{LogBase, Receiver};
use crate::Result;

pub const CSV_HEADER: &str = "sweep_value,receiver,csi,se_sim_mean,se_sim_stderr,se_approx,rel_dev,ee_bits_per_joule";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub receiver: Receiver,
    pub csi: CsiMode,
    /// Mean sum-SE over trials.
    pub se_sim_mean: f64,
    pub se_sim_stderr: f64,
    /// Mean closed-form sum-SE, when an approximation exists for this pair.
    pub se_approx: Option<f64>,
    pub rel_dev: Option<f64>,
    pub ee: Option<f64>,
    /// Trials behind this row.
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub seed: u64,
    pub trials: usize,
    pub config_hash: String,
    pub axis: SweepAxis,
    pub log_base: LogBase,
    pub tolerance: f64,
    /// Indices of rows whose relative deviation exceeds the tolerance.
    pub flagged: Vec<usize>,
    /// Limiting sum-SE when the sweep has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_sum_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub meta: TableMeta,
    pub rows: Vec<ResultRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultTable {
    pub fn row(&self, value: f64, receiver: Receiver, csi: CsiMode) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == value && r.receiver == receiver && r.csi == csi)
    }

    /// Rows of one (receiver, CSI) pair in sweep order.
    pub fn series(&self, receiver: Receiver, csi: CsiMode) -> Vec<&ResultRow> {
        self.rows
            .iter()
            .filter(|r| r.receiver == receiver && r.csi == csi)
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        writeln!(out, "# {}", serde_json::to_string(&self.meta)?).expect("write to string");
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.sweep_value,
                r.receiver,
                r.csi,
                r.se_sim_mean,
                r.se_sim_stderr,
                cell(r.se_approx),
                cell(r.rel_dev),
                cell(r.ee)
            )
            .expect("write to string");
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}
