//! Experiment result tables: aligned text for the terminal, CSV and JSON for
//! files. Wall times are shown on standard output only, so output files are
//! byte-identical across reruns of the same seeded invocation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub command: String,
    pub seed: u64,
    pub version: String,
}

impl TableMeta {
    pub fn new(command: &str, seed: u64) -> Self {
        TableMeta {
            command: command.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub dist: String,
    pub k: usize,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub replications: usize,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultTable {
    pub meta: TableMeta,
    pub rows: Vec<ResultRow>,
    /// Seconds per row; never serialized into output files.
    #[serde(skip)]
    pub wall_times_s: Vec<f64>,
}

// Wall times are a measurement of the run, not a result; two runs of the
// same experiment are equal whenever their numbers agree.
impl PartialEq for ResultTable {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta && self.rows == other.rows
    }
}

impl ResultTable {
    pub fn new(meta: TableMeta) -> Self {
        ResultTable { meta, rows: Vec::new(), wall_times_s: Vec::new() }
    }

    pub fn push(&mut self, row: ResultRow, wall_time_s: f64) {
        self.rows.push(row);
        self.wall_times_s.push(wall_time_s);
    }

    /// Aligned table for the terminal, wall time included.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# {} (seed {}, v{})\n",
            self.meta.command, self.meta.seed, self.meta.version
        ));
        out.push_str(&format!(
            "{:<6} {:<10} {:>4} {:>4} {:>6} {:>6} {:>6} {:>10} {:>10}\n",
            "model", "dist", "K", "d", "m", "n", "reps", "rate", "wall[s]"
        ));
        for (row, wall) in self.rows.iter().zip(&self.wall_times_s) {
            out.push_str(&format!(
                "{:<6} {:<10} {:>4} {:>4} {:>6} {:>6} {:>6} {:>10.4} {:>10.2}\n",
                row.model,
                row.dist,
                row.k,
                row.d,
                row.m,
                row.n,
                row.replications,
                row.rejection_rate,
                wall,
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        for row in &self.rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv(&self, path: &Path) -> Result<Vec<ResultRow>> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for record in reader.deserialize() {
            rows.push(record?);
        }
        Ok(rows)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<ResultTable> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    /// Writes `<base>.csv` and `<base>.json`.
    pub fn write_files(&self, base: &Path) -> Result<()> {
        self.write_csv(&base.with_extension("csv"))?;
        self.write_json(&base.with_extension("json"))?;
        Ok(())
    }
}
